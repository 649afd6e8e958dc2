"""Skip-gram training with negative sampling, from walk corpora.

Plain numpy SGD: for every (center, context) pair within the window the
positive logit is pushed up and k sampled negative logits are pushed
down. Updates are applied in mini-batches with index-accumulating
scatter-adds, which keeps the exact mode deterministic while staying
vectorized. Negatives are drawn from the unigram distribution raised to
0.75; draws equal to the pair's context token are masked out.
"""

import threading
from dataclasses import dataclass

import numpy as np

from fairwalks.sampling import AliasTable
from fairwalks.seeds import derive_seed, rng_for

NEGATIVE_DISTRIBUTION_POWER = 0.75
FINAL_LR_FRACTION = 0.01


class TrainingDiverged(RuntimeError):
    """NaN or Inf appeared in the parameters during training."""


@dataclass
class EmbeddingMatrix:
    """Trained node vectors plus the context-side vectors and run metadata.

    ``vectors`` (the input side) is the embedding used downstream.
    """

    vectors: np.ndarray
    context_vectors: np.ndarray
    meta: dict

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def node_count(self) -> int:
        return self.vectors.shape[0]


def build_frequency_table(walks, node_count: int) -> np.ndarray:
    """Occurrence count of every node over the corpus."""
    counts = np.zeros(node_count, dtype=np.int64)
    for walk in walks:
        np.add.at(counts, walk, 1)
    if counts.sum() == 0:
        raise ValueError("corpus is empty")
    return counts


def negative_distribution(counts, power: float = NEGATIVE_DISTRIBUTION_POWER) -> np.ndarray:
    """Sampling weights proportional to count**power, normalized."""
    weights = np.power(np.asarray(counts, dtype=np.float64), power)
    total = weights.sum()
    if total <= 0:
        raise ValueError("all counts are zero")
    return weights / total


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def sgns_pair_loss(center, context, negatives):
    """Loss and exact gradients for one (center, context, negatives) triple.

    loss = -log sigma(center . context) - sum_i log sigma(-center . neg_i)

    Returns (loss, grad_center, grad_context, grad_negatives).
    """
    center = np.asarray(center, dtype=np.float64)
    context = np.asarray(context, dtype=np.float64)
    negatives = np.asarray(negatives, dtype=np.float64).reshape(-1, len(center))

    pos_dot = center @ context
    neg_dots = negatives @ center
    # log(1 + e^x) via logaddexp keeps saturated pairs finite
    loss = np.logaddexp(0.0, -pos_dot) + np.logaddexp(0.0, neg_dots).sum()

    g_pos = _sigmoid(np.array([pos_dot]))[0] - 1.0
    g_negs = _sigmoid(neg_dots)
    grad_center = g_pos * context + g_negs @ negatives
    grad_context = g_pos * center
    grad_negatives = g_negs[:, None] * center[None, :]
    return float(loss), grad_center, grad_context, grad_negatives


def _pair_arrays(walk, window):
    """All (center, context) index pairs within the window, both directions."""
    arr = np.asarray(walk, dtype=np.int64)
    centers = []
    contexts = []
    for offset in range(1, window + 1):
        if len(arr) <= offset:
            break
        left, right = arr[:-offset], arr[offset:]
        centers.append(left)
        contexts.append(right)
        centers.append(right)
        contexts.append(left)
    if not centers:
        return None, None
    return np.concatenate(centers), np.concatenate(contexts)


def _count_pairs(walks, window):
    total = 0
    for walk in walks:
        m = len(walk)
        for offset in range(1, window + 1):
            if m > offset:
                total += 2 * (m - offset)
    return total


class _Trainer:
    def __init__(self, w_in, w_out, table, negatives, lr0, total_pairs, batch_size):
        self.w_in = w_in
        self.w_out = w_out
        self.table = table
        self.negatives = negatives
        self.lr0 = lr0
        self.total_pairs = max(total_pairs, 1)
        self.batch_size = batch_size
        self.pairs_done = 0
        self.progress_lock = threading.Lock()

    def current_lr(self):
        frac = min(self.pairs_done / self.total_pairs, 1.0)
        return self.lr0 * (1.0 - frac * (1.0 - FINAL_LR_FRACTION))

    def process(self, centers, contexts, rng):
        """One mini-batch of SGD updates; returns the summed pair loss."""
        b = len(centers)
        k = self.negatives
        lr = self.current_lr()
        neg = self.table.draw(rng, size=(b, k))
        live = neg != contexts[:, None]

        c_vec = self.w_in[centers]
        x_vec = self.w_out[contexts]
        n_vec = self.w_out[neg.ravel()].reshape(b, k, -1)

        pos_dot = np.einsum("bd,bd->b", c_vec, x_vec)
        neg_dot = np.einsum("bkd,bd->bk", n_vec, c_vec)

        loss = np.logaddexp(0.0, -pos_dot).sum() + (
            np.logaddexp(0.0, neg_dot) * live
        ).sum()

        g_pos = _sigmoid(pos_dot) - 1.0
        g_neg = _sigmoid(neg_dot) * live

        grad_c = g_pos[:, None] * x_vec + np.einsum("bk,bkd->bd", g_neg, n_vec)
        grad_x = g_pos[:, None] * c_vec
        grad_n = g_neg[:, :, None] * c_vec[:, None, :]

        np.add.at(self.w_in, centers, -lr * grad_c)
        np.add.at(self.w_out, contexts, -lr * grad_x)
        np.add.at(self.w_out, neg.ravel(), -lr * grad_n.reshape(b * k, -1))

        with self.progress_lock:
            self.pairs_done += b
        return float(loss)

    def run_walks(self, walks, order, window, rng):
        """Stream pairs from the ordered walks through mini-batches."""
        loss_sum = 0.0
        pair_count = 0
        buf_c = []
        buf_x = []
        buffered = 0
        for idx in order:
            centers, contexts = _pair_arrays(walks[idx], window)
            if centers is None:
                continue
            buf_c.append(centers)
            buf_x.append(contexts)
            buffered += len(centers)
            if buffered >= self.batch_size:
                c = np.concatenate(buf_c)
                x = np.concatenate(buf_x)
                for start in range(0, len(c), self.batch_size):
                    end = start + self.batch_size
                    loss_sum += self.process(c[start:end], x[start:end], rng)
                pair_count += len(c)
                buf_c, buf_x, buffered = [], [], 0
        if buffered:
            c = np.concatenate(buf_c)
            x = np.concatenate(buf_x)
            for start in range(0, len(c), self.batch_size):
                end = start + self.batch_size
                loss_sum += self.process(c[start:end], x[start:end], rng)
            pair_count += len(c)
        return loss_sum, pair_count


def train(
    walks,
    node_count: int,
    dim: int = 64,
    window: int = 5,
    negatives: int = 5,
    epochs: int = 5,
    learning_rate: float = 0.025,
    seed: int = 0,
    mode: str = "exact",
    batch_size: int = 1024,
    workers: int = 4,
) -> EmbeddingMatrix:
    """Train node embeddings over a walk corpus.

    The learning rate decays linearly from ``learning_rate`` to 1% of it
    across all scheduled pairs. ``mode='exact'`` is single-threaded and
    bit-reproducible for a fixed seed; ``mode='parallel'`` shards walks
    across threads that update shared parameters without locking, trading
    determinism for speed.
    """
    if dim < 2:
        raise ValueError("dim must be >= 2")
    if mode not in ("exact", "parallel"):
        raise ValueError(f"unknown training mode {mode!r}")
    walks = [w for w in walks if len(w) > 0]
    if not walks:
        raise ValueError("corpus is empty")

    counts = build_frequency_table(walks, node_count)
    table = AliasTable(negative_distribution(counts))

    init_rng = rng_for(seed, "init")
    w_in = (init_rng.random((node_count, dim)) - 0.5) / dim
    w_out = np.zeros((node_count, dim), dtype=np.float64)

    # cap batches at the vocabulary size: a node then appears O(1) times per
    # batch and the accumulated stale-gradient step stays close to per-pair SGD
    batch_size = max(8, min(batch_size, node_count))
    total_pairs = _count_pairs(walks, window) * max(epochs, 1)
    trainer = _Trainer(w_in, w_out, table, negatives, learning_rate, total_pairs, batch_size)

    epoch_losses = []
    for epoch in range(epochs):
        order = rng_for(seed, "epoch", epoch).permutation(len(walks))
        if mode == "exact":
            rng = rng_for(seed, "sgd", epoch)
            loss_sum, pair_count = trainer.run_walks(walks, order, window, rng)
        else:
            shards = np.array_split(order, max(workers, 1))
            results = []

            def run_shard(shard, shard_id):
                rng = rng_for(seed, "sgd", epoch, shard_id)
                results.append(trainer.run_walks(walks, shard, window, rng))

            threads = [
                threading.Thread(target=run_shard, args=(shard, i))
                for i, shard in enumerate(shards)
                if len(shard)
            ]
            for t in threads:
                t.start()
            for t in threads:
                t.join()
            loss_sum = sum(r[0] for r in results)
            pair_count = sum(r[1] for r in results)
        epoch_losses.append(loss_sum / max(pair_count, 1))
        if not np.isfinite(w_in).all() or not np.isfinite(w_out).all():
            raise TrainingDiverged(
                f"non-finite parameters after epoch {epoch}; "
                f"lower the learning rate (currently {learning_rate})"
            )

    meta = {
        "dim": dim,
        "window": window,
        "negatives": negatives,
        "epochs": epochs,
        "learning_rate": learning_rate,
        "final_lr_fraction": FINAL_LR_FRACTION,
        "seed": seed,
        "mode": mode,
        "epoch_mean_loss": epoch_losses,
        "negative_power": NEGATIVE_DISTRIBUTION_POWER,
    }
    return EmbeddingMatrix(w_in, w_out, meta)


def save_embeddings(matrix: EmbeddingMatrix, path, tokens=None):
    """Text matrix: header ``n dim``, then ``token v1 ... v_dim`` rows."""
    n, dim = matrix.vectors.shape
    if tokens is None:
        tokens = [str(i) for i in range(n)]
    with open(path, "w") as f:
        f.write(f"{n} {dim}\n")
        for tok, row in zip(tokens, matrix.vectors):
            f.write(tok + " " + " ".join(repr(float(x)) for x in row) + "\n")


def load_embeddings(path):
    """Returns (tokens, vectors) from the text matrix format."""
    with open(path) as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: malformed header")
        n, dim = int(header[0]), int(header[1])
        tokens = []
        rows = []
        for line in f:
            parts = line.split()
            if not parts:
                continue
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: row has {len(parts) - 1} values, expected {dim}")
            tokens.append(parts[0])
            rows.append([float(x) for x in parts[1:]])
    if len(tokens) != n:
        raise ValueError(f"{path}: header claims {n} rows, found {len(tokens)}")
    return tokens, np.array(rows, dtype=np.float64)
