import hypothesis
import numpy as np
import pytest

from fairwalks.graph import AttributedGraph

hypothesis.settings.register_profile(
    "default", max_examples=50, deadline=None
)
hypothesis.settings.load_profile("default")


def make_graph(edges, attrs=None, n=None):
    """Small-graph helper: edges as (u, v[, w]) tuples over dense IDs."""
    pairs = []
    weights = []
    for e in edges:
        u, v = e[0], e[1]
        w = e[2] if len(e) > 2 else 1.0
        pairs.append((min(u, v), max(u, v)))
        weights.append(w)
    if n is None:
        n = max(max(u, v) for u, v in pairs) + 1 if pairs else 0
    edge_index = np.array(pairs, dtype=np.int64).reshape(-1, 2)
    edge_weight = np.array(weights, dtype=np.float64)
    if len(edge_index):
        order = np.lexsort((edge_index[:, 1], edge_index[:, 0]))
        edge_index, edge_weight = edge_index[order], edge_weight[order]
    attributes = {name: list(values) for name, values in (attrs or {}).items()}
    return AttributedGraph(n, edge_index, edge_weight, attributes, [str(i) for i in range(n)])


@pytest.fixture
def graph_factory():
    return make_graph
