"""Boundary-biased edge reweighting (CrossWalk).

Two steps. First, estimate each node's closeness to group boundaries as
the proportion of short random-walk visits that land in a foreign group.
Second, redistribute every node's outgoing transition mass: a fraction
``alpha`` goes to cross-group neighbors (split equally between the foreign
groups present), the rest stays in-group, and within each share the
individual neighbor weights are tilted toward boundary-close nodes by
raising the closeness to the power ``beta``.
"""

from dataclasses import dataclass

import numpy as np

from fairwalks.graph import AttributedGraph, GroupPartition
from fairwalks.seeds import rng_for

CLOSENESS_SMOOTHING = 1e-3


@dataclass
class BoundaryCloseness:
    """Per-node estimate of how often short walks cross group boundaries."""

    values: np.ndarray
    walks_per_node: int
    walk_length: int
    seed: int

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("closeness values must lie in [0, 1]")


@dataclass
class BiasedGraph:
    """Per-node normalized outgoing transition distributions.

    ``neighbors[v]`` and ``probs[v]`` are aligned arrays; probs sum to 1
    for every non-isolated node. Directed: probs[v] toward u generally
    differs from probs[u] toward v.
    """

    base: AttributedGraph
    neighbors: list
    probs: list
    alpha: float
    beta: float

    def out_distribution(self, v: int):
        return self.neighbors[v], self.probs[v]


def estimate_closeness(
    graph: AttributedGraph,
    partition: GroupPartition,
    walks_per_node: int = 10,
    walk_length: int = 5,
    seed: int = 0,
) -> BoundaryCloseness:
    """Monte-Carlo boundary closeness over the original edge weights.

    From every node, ``walks_per_node`` first-order weighted walks of
    ``walk_length`` steps are run; the estimate is the fraction of visited
    positions (start excluded) whose group differs from the start's group.
    Deterministic for a fixed seed, independent of evaluation order.
    """
    if walks_per_node < 1 or walk_length < 1:
        raise ValueError("walks_per_node and walk_length must be >= 1")
    if graph.edge_count < 1:
        raise ValueError("graph has no edges")
    n = graph.node_count
    group = partition.group_of
    cumw = [np.cumsum(graph.neighbor_weights(v)) for v in range(n)]

    values = np.zeros(n, dtype=np.float64)
    total = walks_per_node * walk_length
    for v in range(n):
        if graph.degree(v) == 0:
            continue
        draws = rng_for(seed, "closeness", v).random((walks_per_node, walk_length))
        foreign = 0
        for r in range(walks_per_node):
            cur = v
            for step in range(walk_length):
                cw = cumw[cur]
                idx = np.searchsorted(cw, draws[r, step] * cw[-1], side="right")
                cur = int(graph.neighbors(cur)[min(idx, len(cw) - 1)])
                if group[cur] != group[v]:
                    foreign += 1
        values[v] = foreign / total
    return BoundaryCloseness(values, walks_per_node, walk_length, seed)


def reweight(
    graph: AttributedGraph,
    partition: GroupPartition,
    closeness: BoundaryCloseness,
    alpha: float,
    beta: float,
    smoothing: float = CLOSENESS_SMOOTHING,
) -> BiasedGraph:
    """Build boundary-biased transition distributions.

    For a node with same-group neighbors S and foreign groups c_1..c_R
    among its neighbors, mass (1 - alpha) is spread over S and alpha / R
    over each foreign group, proportional to w(v, u) * (m(u) + eps)^beta
    within each share. Nodes with no foreign neighbors keep all mass
    in-group; nodes with only foreign neighbors spread the full mass over
    the foreign groups equally.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if beta < 0:
        raise ValueError("beta must be >= 0")
    boost = np.power(closeness.values + smoothing, beta)
    group = partition.group_of

    neighbors = []
    probs = []
    for v in range(graph.node_count):
        nbrs = graph.neighbors(v)
        neighbors.append(nbrs)
        if len(nbrs) == 0:
            probs.append(np.empty(0, dtype=np.float64))
            continue
        scores = graph.neighbor_weights(v) * boost[nbrs]
        nbr_groups = group[nbrs]
        same = nbr_groups == group[v]
        foreign_groups = np.unique(nbr_groups[~same])
        r = len(foreign_groups)
        if r == 0:
            probs.append(_share(scores, np.ones(len(nbrs), dtype=bool), 1.0))
            continue
        out = np.zeros(len(nbrs), dtype=np.float64)
        cross_mass = alpha if same.any() else 1.0
        if same.any():
            out += _share(scores, same, 1.0 - alpha)
        for g in foreign_groups:
            out += _share(scores, nbr_groups == g, cross_mass / r)
        probs.append(out)
    return BiasedGraph(graph, neighbors, probs, alpha, beta)


def _share(scores, mask, mass):
    """Distribute ``mass`` over the masked entries proportional to scores."""
    out = np.zeros(len(scores), dtype=np.float64)
    total = scores[mask].sum()
    if total > 0:
        out[mask] = mass * scores[mask] / total
    else:  # all-zero scores only when smoothing is disabled
        out[mask] = mass / mask.sum()
    return out


def save_biased(biased: BiasedGraph, path):
    """Directed weighted edge list ``u<TAB>v<TAB>prob`` with original IDs."""
    ids = biased.base.original_ids
    with open(path, "w") as f:
        f.write(f"# alpha={biased.alpha!r} beta={biased.beta!r}\n")
        for v in range(biased.base.node_count):
            for u, p in zip(biased.neighbors[v], biased.probs[v]):
                f.write(f"{ids[v]}\t{ids[u]}\t{float(p)!r}\n")


def load_biased(path, graph: AttributedGraph) -> BiasedGraph:
    """Rebind a serialized biased edge list to its base graph."""
    index = {nid: i for i, nid in enumerate(graph.original_ids)}
    alpha = beta = float("nan")
    rows = {}
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.strip()
            if stripped.startswith("#"):
                for token in stripped[1:].split():
                    key, _, value = token.partition("=")
                    if key == "alpha":
                        alpha = float(value)
                    elif key == "beta":
                        beta = float(value)
                continue
            if not stripped:
                continue
            parts = stripped.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 'u\\tv\\tprob'")
            try:
                src, dst = index[parts[0]], index[parts[1]]
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: unknown node {exc}") from None
            rows.setdefault(src, []).append((dst, float(parts[2])))

    neighbors = []
    probs = []
    for v in range(graph.node_count):
        entries = sorted(rows.get(v, []))
        neighbors.append(np.array([d for d, _ in entries], dtype=np.int64))
        probs.append(np.array([p for _, p in entries], dtype=np.float64))
    return BiasedGraph(graph, neighbors, probs, alpha, beta)
