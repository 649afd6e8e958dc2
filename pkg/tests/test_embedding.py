import math

import numpy as np
import pytest

from fairwalks.embedding import (
    EmbeddingMatrix,
    build_frequency_table,
    load_embeddings,
    negative_distribution,
    save_embeddings,
    sgns_pair_loss,
    train,
)
from fairwalks.graph import generate_sbm
from fairwalks.walks import TransitionWeights, WalkConfig, generate_walks


class TestFrequencyTable:
    def test_counts(self):
        counts = build_frequency_table([[0, 1, 0]], node_count=2)
        assert counts.tolist() == [2, 1]

    def test_uniform_counts_give_uniform_distribution(self):
        dist = negative_distribution([7, 7, 7, 7])
        np.testing.assert_allclose(dist, 0.25)

    def test_power_ratio(self):
        dist = negative_distribution([16, 1])
        assert dist[0] / dist[1] == pytest.approx(8.0)  # 16**0.75 == 8


class TestPairLoss:
    def test_zero_vectors(self):
        k = 4
        loss, gc, gx, gn = sgns_pair_loss(
            np.zeros(8), np.zeros(8), np.zeros((k, 8))
        )
        assert loss == pytest.approx((1 + k) * math.log(2))
        assert np.all(gc == 0) and np.all(gx == 0) and np.all(gn == 0)

    def test_saturated_pair_loss_vanishes(self):
        center = np.full(4, 10.0)
        context = np.full(4, 10.0)
        loss, *_ = sgns_pair_loss(center, context, np.empty((0, 4)))
        assert loss == pytest.approx(0.0, abs=1e-6)

    def test_extreme_dots_stay_finite(self):
        center = np.full(4, 500.0)
        loss, gc, gx, gn = sgns_pair_loss(center, -center, center[None, :])
        assert np.isfinite(loss)
        assert np.isfinite(gc).all() and np.isfinite(gx).all() and np.isfinite(gn).all()

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-5
        for _ in range(100):
            dim = 8
            k = 3
            center = rng.normal(0, 1, dim)
            context = rng.normal(0, 1, dim)
            negatives = rng.normal(0, 1, (k, dim))
            _, gc, gx, gn = sgns_pair_loss(center, context, negatives)

            def loss_at(c, x, n):
                return sgns_pair_loss(c, x, n)[0]

            def check(analytic, bump):
                numeric = np.zeros_like(analytic)
                it = np.nditer(analytic, flags=["multi_index"])
                for _ in it:
                    idx = it.multi_index
                    plus = bump(idx, +h)
                    minus = bump(idx, -h)
                    numeric[idx] = (plus - minus) / (2 * h)
                scale = np.maximum(np.abs(analytic), 1e-8)
                assert np.max(np.abs(numeric - analytic) / scale) <= 1e-4

            def bump_center(idx, eps):
                c = center.copy()
                c[idx] += eps
                return loss_at(c, context, negatives)

            def bump_context(idx, eps):
                x = context.copy()
                x[idx] += eps
                return loss_at(center, x, negatives)

            def bump_neg(idx, eps):
                n = negatives.copy()
                n[idx] += eps
                return loss_at(center, context, n)

            check(gc, bump_center)
            check(gx, bump_context)
            check(gn, bump_neg)


def clique_pair_corpus(seed=0, clique=12, walks_per_node=6, walk_length=15):
    edges = []
    for base in (0, clique):
        for i in range(clique):
            for j in range(i + 1, clique):
                edges.append((base + i, base + j))
    from tests.conftest import make_graph

    g = make_graph(edges, n=2 * clique)
    tw = TransitionWeights.from_graph(g)
    cfg = WalkConfig(walks_per_node=walks_per_node, walk_length=walk_length, seed=seed)
    return generate_walks(tw, cfg), 2 * clique, clique


class TestTrain:
    def test_zero_epochs_returns_initialization(self):
        corpus, n, _ = clique_pair_corpus()
        m1 = train(corpus.walks, n, dim=8, epochs=0, seed=7)
        m2 = train(corpus.walks, n, dim=8, epochs=0, seed=7)
        assert np.array_equal(m1.vectors, m2.vectors)
        assert np.all(m1.context_vectors == 0)
        assert np.all(np.abs(m1.vectors) <= 0.5 / 8)

    def test_exact_mode_deterministic(self):
        corpus, n, _ = clique_pair_corpus()
        m1 = train(corpus.walks, n, dim=8, epochs=2, seed=3, mode="exact")
        m2 = train(corpus.walks, n, dim=8, epochs=2, seed=3, mode="exact")
        assert np.array_equal(m1.vectors, m2.vectors)
        assert np.array_equal(m1.context_vectors, m2.context_vectors)

    def test_loss_decreases_by_epoch_five(self):
        corpus, n, _ = clique_pair_corpus()
        m = train(corpus.walks, n, dim=16, epochs=5, seed=1)
        losses = m.meta["epoch_mean_loss"]
        assert losses[4] < losses[0]

    def test_repeated_pair_walk_monotone_loss(self):
        walks = [[0, 1]] * 50
        m = train(
            walks, 2, dim=4, window=2, negatives=2, epochs=10,
            learning_rate=0.05, seed=2,
        )
        losses = m.meta["epoch_mean_loss"]
        assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))

    def test_cliques_separate_in_cosine_similarity(self):
        corpus, n, clique = clique_pair_corpus(seed=5)
        m = train(corpus.walks, n, dim=16, epochs=5, seed=5)
        vecs = m.vectors / np.linalg.norm(m.vectors, axis=1, keepdims=True)
        sims = vecs @ vecs.T
        mask_a = np.arange(n) < clique
        intra = np.concatenate(
            [sims[np.ix_(mask_a, mask_a)].ravel(), sims[np.ix_(~mask_a, ~mask_a)].ravel()]
        )
        inter = sims[np.ix_(mask_a, ~mask_a)].ravel()
        assert intra.mean() > inter.mean()

    def test_parallel_mode_trains(self):
        corpus, n, clique = clique_pair_corpus(seed=8)
        m = train(corpus.walks, n, dim=8, epochs=2, seed=8, mode="parallel", workers=2)
        assert np.isfinite(m.vectors).all()
        assert m.meta["mode"] == "parallel"

    def test_two_block_sbm_nearest_neighbor_floor(self):
        g, _ = generate_sbm([60, 60], 0.2, 0.01, seed=17)
        tw = TransitionWeights.from_graph(g)
        corpus = generate_walks(tw, WalkConfig(walks_per_node=8, walk_length=20, seed=17))
        m = train(corpus.walks, g.node_count, dim=16, window=5, epochs=3, seed=17)
        blocks = np.array([int(b[5:]) for b in g.attributes["block"]])
        vecs = m.vectors / np.linalg.norm(m.vectors, axis=1, keepdims=True)
        sims = vecs @ vecs.T
        np.fill_diagonal(sims, -np.inf)
        nearest = sims.argmax(axis=1)
        accuracy = (blocks[nearest] == blocks).mean()
        assert accuracy >= 0.95

    def test_invalid_mode_rejected(self):
        with pytest.raises(ValueError):
            train([[0, 1]], 2, mode="gpu")


class TestEmbeddingIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        matrix = EmbeddingMatrix(rng.normal(0, 1, (5, 3)), np.zeros((5, 3)), {})
        path = tmp_path / "emb.txt"
        save_embeddings(matrix, path, tokens=["a", "b", "c", "d", "e"])
        tokens, vectors = load_embeddings(path)
        assert tokens == ["a", "b", "c", "d", "e"]
        np.testing.assert_array_equal(vectors, matrix.vectors)

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 3\na 0.0 0.0 0.0\n")
        with pytest.raises(ValueError):
            load_embeddings(path)
