import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fairwalks.graph import (
    AttributedGraph,
    ControlAttributeSpec,
    GraphFormatError,
    bin_age,
    bin_age_attribute,
    generate_sbm,
    ingest,
    load_graph,
    partition_by,
    save_graph,
    select_subgraph,
)


def write_dataset(tmp_path, edge_lines, attr_lines, prefix="g"):
    edge_path = tmp_path / f"{prefix}.edges"
    attr_path = tmp_path / f"{prefix}.attrs"
    edge_path.write_text("\n".join(edge_lines) + "\n")
    attr_path.write_text("\n".join(attr_lines) + "\n")
    return edge_path, attr_path


TRIANGLE_ATTRS = ["node\tloc", "a\tX", "b\tX", "c\tY"]


class TestLoadGraph:
    def test_identity_ingestion(self, tmp_path):
        paths = write_dataset(tmp_path, ["a b", "b c", "a c"], TRIANGLE_ATTRS)
        g = load_graph(*paths)
        assert g.node_count == 3
        assert g.edge_count == 3
        assert np.all(g.edge_weight == 1.0)
        assert g.original_ids == ["a", "b", "c"]

    def test_duplicate_edges_collapse_by_weight_sum(self, tmp_path):
        paths = write_dataset(tmp_path, ["a b", "b a"], ["node\tloc", "a\tX", "b\tY"])
        g = load_graph(*paths)
        assert g.edge_count == 1
        assert g.edge_weight[0] == 2.0

    def test_nodes_missing_attributes_dropped(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a b", "b c", "a c"], ["node\tloc", "a\tX", "b\tX"]
        )
        g = load_graph(*paths)
        assert g.node_count == 2
        assert g.edge_count == 1
        assert g.original_ids == ["a", "b"]

    def test_empty_attribute_value_counts_as_missing(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a b", "b c", "a c"], ["node\tloc", "a\tX", "b\tX", "c\t"]
        )
        g, report = ingest(*paths)
        assert g.node_count == 2
        assert report.nodes_dropped_missing_attr == 1

    def test_explicit_weights_and_comments(self, tmp_path):
        paths = write_dataset(
            tmp_path,
            ["# header comment", "a b 2.5", "b c 0.5  # trailing"],
            TRIANGLE_ATTRS,
        )
        g = load_graph(*paths)
        assert g.edge_count == 2
        assert sorted(g.edge_weight.tolist()) == [0.5, 2.5]

    def test_malformed_line_reports_line_number(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a b", "a b c d e"], ["node\tloc", "a\tX", "b\tY"]
        )
        with pytest.raises(GraphFormatError, match=":2"):
            load_graph(*paths)

    def test_non_numeric_weight_rejected(self, tmp_path):
        paths = write_dataset(tmp_path, ["a b heavy"], ["node\tloc", "a\tX", "b\tY"])
        with pytest.raises(GraphFormatError, match=":1"):
            load_graph(*paths)

    def test_attribute_row_for_unknown_node_rejected(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a b"], ["node\tloc", "a\tX", "b\tY", "z\tX"]
        )
        with pytest.raises(GraphFormatError, match="unknown node"):
            load_graph(*paths)

    def test_empty_after_filtering_rejected(self, tmp_path):
        paths = write_dataset(tmp_path, ["a b"], ["node\tloc"])
        with pytest.raises(GraphFormatError, match="empty graph"):
            load_graph(*paths)

    def test_self_loops_dropped_and_counted(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a a", "a b"], ["node\tloc", "a\tX", "b\tY"]
        )
        g, report = ingest(*paths)
        assert g.edge_count == 1
        assert report.self_loops_dropped == 1

    def test_numeric_ids_sorted_numerically(self, tmp_path):
        paths = write_dataset(
            tmp_path,
            ["10 2", "2 1"],
            ["node\tloc", "10\tX", "2\tY", "1\tZ"],
        )
        g = load_graph(*paths)
        assert g.original_ids == ["1", "2", "10"]


class TestRoundTrip:
    def test_fixture_round_trip(self, tmp_path):
        paths = write_dataset(
            tmp_path, ["a b 2.0", "b c", "a c 0.25"], TRIANGLE_ATTRS
        )
        g1 = load_graph(*paths)
        out = (tmp_path / "rt.edges", tmp_path / "rt.attrs")
        save_graph(g1, *out)
        g2 = load_graph(*out)
        assert g1 == g2

    @given(
        edges=st.sets(
            st.tuples(st.integers(0, 9), st.integers(0, 9)).filter(
                lambda e: e[0] != e[1]
            ),
            min_size=1,
            max_size=20,
        ),
        weights_seed=st.integers(0, 2**16),
    )
    @settings(max_examples=30)
    def test_round_trip_random_graphs(self, tmp_path_factory, edges, weights_seed):
        tmp_path = tmp_path_factory.mktemp("rt")
        rng = np.random.default_rng(weights_seed)
        nodes = sorted({v for e in edges for v in e})
        edge_lines = [
            f"n{u}\tn{v}\t{float(rng.uniform(0.1, 5.0))!r}"
            for u, v in edges
            if u < v or (v, u) not in edges
        ]
        attr_lines = ["node\tcolor"] + [
            f"n{v}\t{'red' if v % 2 else 'blue'}" for v in nodes
        ]
        paths = write_dataset(tmp_path, edge_lines, attr_lines)
        g1 = load_graph(*paths)
        out = (tmp_path / "o.edges", tmp_path / "o.attrs")
        save_graph(g1, *out)
        assert load_graph(*out) == g1


class TestBinAge:
    @pytest.mark.parametrize(
        "age,label",
        [(16, "16-18"), (17, "16-18"), (18, "16-18"), (19, "19-21"),
         (21, "19-21"), (22, "22+"), (40, "22+")],
    )
    def test_bins(self, age, label):
        assert bin_age(age) == label

    def test_underage_rejected(self):
        with pytest.raises(ValueError):
            bin_age(15)

    def test_attribute_binning_drops_bad_rows(self, graph_factory):
        g = graph_factory(
            [(0, 1), (1, 2), (2, 3), (3, 0)],
            attrs={"age": ["17", "19", "12", "forty"]},
        )
        binned, dropped = bin_age_attribute(g, "age")
        assert dropped == 2
        assert binned.node_count == 2
        assert binned.attributes["age"] == ["16-18", "19-21"]


class TestPartitionBy:
    def test_age_bins_one_node_each(self, graph_factory):
        g = graph_factory(
            [(0, 1), (1, 2)], attrs={"age": ["16-18", "19-21", "22+"]}
        )
        p = partition_by(g, "age")
        assert p.num_groups == 3
        assert p.group_labels == ("16-18", "19-21", "22+")

    def test_single_value_rejected(self, graph_factory):
        g = graph_factory([(0, 1)], attrs={"loc": ["X", "X"]})
        with pytest.raises(ValueError, match="fewer than 2"):
            partition_by(g, "loc")

    def test_group_sizes(self, graph_factory):
        g = graph_factory(
            [(0, 1), (1, 2), (2, 3), (3, 4)],
            attrs={"loc": ["X", "X", "Y", "Y", "Z"]},
        )
        p = partition_by(g, "loc")
        assert p.group_labels == ("X", "Y", "Z")
        assert p.sizes().tolist() == [2, 2, 1]

    def test_unknown_attribute(self, graph_factory):
        g = graph_factory([(0, 1)], attrs={"loc": ["X", "Y"]})
        with pytest.raises(ValueError, match="unknown attribute"):
            partition_by(g, "nope")

    @given(st.lists(st.sampled_from("ABC"), min_size=2, max_size=40))
    def test_sizes_sum_to_node_count(self, labels):
        n = len(labels)
        edges = [(i, (i + 1) % n) for i in range(n - 1)]
        from tests.conftest import make_graph

        g = make_graph(edges, attrs={"lab": labels}, n=n)
        if len(set(labels)) < 2:
            with pytest.raises(ValueError):
                partition_by(g, "lab")
        else:
            assert partition_by(g, "lab").sizes().sum() == n


def two_triangles(graph_factory, labels=("X", "X", "X", "Y", "Y", "Y")):
    return graph_factory(
        [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)],
        attrs={"loc": list(labels)},
    )


class TestSelectSubgraph:
    def test_full_domain_identity(self, graph_factory):
        g = graph_factory([(0, 1), (1, 2)], attrs={"loc": ["X", "Y", "X"]})
        sub = select_subgraph(g, "loc", {"X", "Y"})
        assert sub == g

    def test_induced_on_allowed_values(self, graph_factory):
        g = two_triangles(graph_factory)
        sub = select_subgraph(g, "loc", {"X"})
        assert sub.node_count == 3
        assert sub.edge_count == 3
        assert sub.original_ids == ["0", "1", "2"]

    def test_largest_component_tie_break(self, graph_factory):
        # two same-size components; the one holding the smallest original ID wins
        g = two_triangles(graph_factory)
        sub = select_subgraph(g, "loc", {"X", "Y"})
        assert sub.original_ids == ["0", "1", "2"]

    def test_largest_component_wins(self, graph_factory):
        g = graph_factory(
            [(0, 1), (2, 3), (3, 4), (2, 4)],
            attrs={"loc": ["X"] * 5},
        )
        sub = select_subgraph(g, "loc", {"X"})
        assert sub.node_count == 3
        assert sub.original_ids == ["2", "3", "4"]

    def test_empty_selection_rejected(self, graph_factory):
        g = graph_factory([(0, 1)], attrs={"loc": ["X", "Y"]})
        with pytest.raises(ValueError, match="no nodes"):
            select_subgraph(g, "loc", {"Z"})

    def test_result_is_connected(self, graph_factory):
        g = two_triangles(graph_factory)
        sub = select_subgraph(g, "loc", {"X", "Y"})
        # BFS from node 0 must reach everything
        seen = {0}
        frontier = [0]
        while frontier:
            v = frontier.pop()
            for u in sub.neighbors(v):
                if int(u) not in seen:
                    seen.add(int(u))
                    frontier.append(int(u))
        assert seen == set(range(sub.node_count))


class TestGenerateSbm:
    def test_single_block_p1_is_complete(self):
        g, _ = generate_sbm([3], 1.0, 0.0, seed=1)
        assert g.node_count == 3
        assert g.edge_count == 3

    def test_two_blocks_no_inter(self):
        g, _ = generate_sbm([2, 2], 1.0, 0.0, seed=1)
        assert g.node_count == 4
        assert g.edge_count == 2
        assert g.attributes["block"] == ["block0", "block0", "block1", "block1"]

    def test_edge_count_within_three_sigma(self):
        sizes = [150, 150, 150]
        g, _ = generate_sbm(sizes, 0.1, 0.01, seed=7)
        intra_pairs = 3 * math.comb(150, 2)
        inter_pairs = 3 * 150 * 150
        mean = 0.1 * intra_pairs + 0.01 * inter_pairs
        var = intra_pairs * 0.1 * 0.9 + inter_pairs * 0.01 * 0.99
        assert abs(g.edge_count - mean) <= 3 * math.sqrt(var)

    def test_seed_determinism(self):
        g1, _ = generate_sbm([30, 30], 0.2, 0.02, seed=11)
        g2, _ = generate_sbm([30, 30], 0.2, 0.02, seed=11)
        assert g1 == g2
        g3, _ = generate_sbm([30, 30], 0.2, 0.02, seed=12)
        assert g1 != g3

    def test_summary_mirrors_graph(self):
        g, summary = generate_sbm([20, 30], 0.3, 0.05, seed=3)
        assert summary["nodes"] == g.node_count
        assert summary["edges"] == g.edge_count
        assert set(summary["groups"]["block"]) <= {"block0", "block1"}

    def test_control_attribute_planted(self):
        spec = ControlAttributeSpec(classes=3, intra_class_bonus=0.05)
        g, summary = generate_sbm([100, 100], 0.1, 0.02, seed=5, control=spec)
        classes = set(g.attributes["control"])
        assert classes <= {"class0", "class1", "class2"}
        assert len(classes) == 3
        assert summary["control"]["intra_class_bonus"] == 0.05

    def test_invalid_probabilities_rejected(self):
        with pytest.raises(ValueError):
            generate_sbm([5], 0.2, 0.5, seed=1)


class TestGraphInvariants:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            AttributedGraph(2, [[0, 0]], [1.0], {}, ["0", "1"])

    def test_rejects_duplicate_edge(self):
        with pytest.raises(ValueError, match="duplicate"):
            AttributedGraph(2, [[0, 1], [0, 1]], [1.0, 1.0], {}, ["0", "1"])

    def test_rejects_nonpositive_weight(self):
        with pytest.raises(ValueError, match="positive"):
            AttributedGraph(2, [[0, 1]], [0.0], {}, ["0", "1"])

    def test_neighbors_sorted(self, graph_factory):
        g = graph_factory([(2, 0), (2, 1), (2, 3)])
        assert g.neighbors(2).tolist() == [0, 1, 3]
