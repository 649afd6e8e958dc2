"""Attributed-graph data model, file ingestion, and synthetic generation.

Graphs are undirected, weighted, simple (no self-loops, no duplicate
edges), with one categorical value per node for every declared attribute.
Node IDs are densified to 0..n-1; the original string IDs are retained for
serialization and reporting.

File formats:
  edge list   lines ``u<TAB>v[<TAB>weight]`` (any whitespace separator),
              ``#`` starts a comment, missing weight defaults to 1.0
  attributes  tab-separated, header ``node<TAB>attr1<TAB>attr2...``,
              one row per node
"""

from collections import deque
from dataclasses import dataclass, field

import numpy as np


class GraphFormatError(ValueError):
    """Malformed input file; message carries the offending line number."""


@dataclass
class IngestReport:
    """Counts of what ingestion dropped or merged."""

    nodes_seen: int = 0
    nodes_dropped_missing_attr: int = 0
    nodes_dropped_bad_age: int = 0
    self_loops_dropped: int = 0
    duplicate_edges_merged: int = 0
    isolated_removed: int = 0


@dataclass(eq=False)
class AttributedGraph:
    """Undirected weighted graph with per-node categorical attributes.

    ``edge_index`` is (m, 2) with u < v in every row, sorted; ``edge_weight``
    is (m,) positive. ``attributes`` maps name -> list of n string values.
    Read-only after construction.
    """

    node_count: int
    edge_index: np.ndarray
    edge_weight: np.ndarray
    attributes: dict
    original_ids: list
    _adj: list = field(default=None, repr=False, compare=False)
    _adj_w: list = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.edge_index = np.asarray(self.edge_index, dtype=np.int64).reshape(-1, 2)
        self.edge_weight = np.asarray(self.edge_weight, dtype=np.float64).reshape(-1)
        self._validate()
        self._build_adjacency()

    def _validate(self):
        n, e, w = self.node_count, self.edge_index, self.edge_weight
        if len(e) != len(w):
            raise ValueError("edge_index and edge_weight length mismatch")
        if len(self.original_ids) != n:
            raise ValueError("original_ids length must equal node_count")
        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise ValueError("edge endpoint out of range")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            if np.any(e[:, 0] > e[:, 1]):
                raise ValueError("edges must be canonical (u < v)")
            keys = e[:, 0] * n + e[:, 1]
            if len(np.unique(keys)) != len(keys):
                raise ValueError("duplicate edges are not allowed")
            if np.any(~(w > 0)):
                raise ValueError("edge weights must be positive")
        for name, values in self.attributes.items():
            if len(values) != n:
                raise ValueError(f"attribute {name!r} must have one value per node")

    def _build_adjacency(self):
        n = self.node_count
        src = np.concatenate([self.edge_index[:, 0], self.edge_index[:, 1]])
        dst = np.concatenate([self.edge_index[:, 1], self.edge_index[:, 0]])
        w = np.concatenate([self.edge_weight, self.edge_weight])
        order = np.lexsort((dst, src))
        src, dst, w = src[order], dst[order], w[order]
        starts = np.searchsorted(src, np.arange(n + 1))
        self._adj = [dst[starts[i]:starts[i + 1]] for i in range(n)]
        self._adj_w = [w[starts[i]:starts[i + 1]] for i in range(n)]

    @property
    def edge_count(self) -> int:
        return len(self.edge_index)

    def neighbors(self, v: int) -> np.ndarray:
        """Neighbor IDs of v, sorted ascending."""
        return self._adj[v]

    def neighbor_weights(self, v: int) -> np.ndarray:
        """Weights aligned with ``neighbors(v)``."""
        return self._adj_w[v]

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def __eq__(self, other):
        if not isinstance(other, AttributedGraph):
            return NotImplemented
        return (
            self.node_count == other.node_count
            and np.array_equal(self.edge_index, other.edge_index)
            and np.array_equal(self.edge_weight, other.edge_weight)
            and self.attributes == other.attributes
            and self.original_ids == other.original_ids
        )

    def summary(self) -> dict:
        """Node/edge counts plus per-attribute group sizes."""
        groups = {}
        for name, values in self.attributes.items():
            counts = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            groups[name] = dict(sorted(counts.items()))
        return {
            "nodes": self.node_count,
            "edges": self.edge_count,
            "groups": groups,
        }


@dataclass
class GroupPartition:
    """Node -> group index for one attribute; labels sorted lexicographically."""

    attribute: str
    group_of: np.ndarray
    group_labels: tuple

    def __post_init__(self):
        self.group_of = np.asarray(self.group_of, dtype=np.int64)
        c = len(self.group_labels)
        if c < 2:
            raise ValueError("a partition needs at least 2 groups")
        counts = np.bincount(self.group_of, minlength=c)
        if len(counts) > c or np.any(counts == 0):
            raise ValueError("every group index in 0..C-1 must be non-empty")

    @property
    def num_groups(self) -> int:
        return len(self.group_labels)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.group_of, minlength=self.num_groups)


def _id_key(raw: str):
    """Sort key for original IDs: numeric when the ID parses as an int."""
    try:
        return (0, int(raw), "")
    except ValueError:
        return (1, 0, raw)


def _parse_edge_file(path):
    """Return ({(u, v): weight} on string IDs, report counters)."""
    edges = {}
    self_loops = 0
    merged = 0
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) not in (2, 3):
                raise GraphFormatError(
                    f"{path}:{lineno}: expected 'u v [weight]', got {len(parts)} fields"
                )
            u, v = parts[0], parts[1]
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise GraphFormatError(
                        f"{path}:{lineno}: weight {parts[2]!r} is not a number"
                    ) from None
                if not w > 0:
                    raise GraphFormatError(f"{path}:{lineno}: weight must be > 0")
            else:
                w = 1.0
            if u == v:
                self_loops += 1
                continue
            key = (u, v) if u < v else (v, u)
            if key in edges:
                edges[key] += w
                merged += 1
            else:
                edges[key] = w
    return edges, self_loops, merged


def _parse_attr_file(path):
    """Return (attribute names, {node_id: row values})."""
    with open(path) as f:
        header = f.readline()
        if not header.strip():
            raise GraphFormatError(f"{path}:1: missing header row")
        columns = header.rstrip("\n").split("\t")
        if columns[0] != "node":
            raise GraphFormatError(f"{path}:1: first header column must be 'node'")
        names = columns[1:]
        rows = {}
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != len(columns):
                raise GraphFormatError(
                    f"{path}:{lineno}: expected {len(columns)} columns, got {len(parts)}"
                )
            node = parts[0]
            if node in rows:
                raise GraphFormatError(f"{path}:{lineno}: duplicate row for node {node!r}")
            rows[node] = parts[1:]
    return names, rows


def _densify(raw_edges, kept_ids, attr_names, attr_rows):
    """Build an AttributedGraph over ``kept_ids`` from string-keyed edges."""
    order = sorted(kept_ids, key=_id_key)
    index = {nid: i for i, nid in enumerate(order)}
    pairs = []
    weights = []
    for (u, v), w in raw_edges.items():
        if u in index and v in index:
            a, b = index[u], index[v]
            pairs.append((a, b) if a < b else (b, a))
            weights.append(w)
    if pairs:
        edge_index = np.array(pairs, dtype=np.int64)
        edge_weight = np.array(weights, dtype=np.float64)
        sort = np.lexsort((edge_index[:, 1], edge_index[:, 0]))
        edge_index, edge_weight = edge_index[sort], edge_weight[sort]
    else:
        edge_index = np.empty((0, 2), dtype=np.int64)
        edge_weight = np.empty(0, dtype=np.float64)
    attributes = {
        name: [attr_rows[nid][j] for nid in order] for j, name in enumerate(attr_names)
    }
    return AttributedGraph(len(order), edge_index, edge_weight, attributes, order)


def ingest(edge_path, attr_path):
    """Load and filter a graph, returning it with an IngestReport.

    Nodes missing any attribute value are dropped along with their incident
    edges. Raises GraphFormatError when the result has no nodes or no edges.
    """
    raw_edges, self_loops, merged = _parse_edge_file(edge_path)
    attr_names, attr_rows = _parse_attr_file(attr_path)

    node_ids = set()
    for u, v in raw_edges:
        node_ids.add(u)
        node_ids.add(v)
    for nid in attr_rows:
        if nid not in node_ids:
            raise GraphFormatError(
                f"{attr_path}: attribute row for unknown node {nid!r}"
            )

    kept = [
        nid
        for nid in node_ids
        if nid in attr_rows and all(v != "" for v in attr_rows[nid])
    ]
    report = IngestReport(
        nodes_seen=len(node_ids),
        nodes_dropped_missing_attr=len(node_ids) - len(kept),
        self_loops_dropped=self_loops,
        duplicate_edges_merged=merged,
    )
    if not kept:
        raise GraphFormatError("empty graph after filtering: no nodes kept")
    graph = _densify(raw_edges, kept, attr_names, attr_rows)
    if graph.edge_count == 0:
        raise GraphFormatError("empty graph after filtering: no edges kept")
    return graph, report


def load_graph(edge_path, attr_path) -> AttributedGraph:
    """`ingest` without the report."""
    graph, _ = ingest(edge_path, attr_path)
    return graph


def save_graph(graph: AttributedGraph, edge_path, attr_path):
    """Write the graph back in the ingestion formats (lossless round trip)."""
    ids = graph.original_ids
    with open(edge_path, "w") as f:
        for (u, v), w in zip(graph.edge_index, graph.edge_weight):
            f.write(f"{ids[u]}\t{ids[v]}\t{float(w)!r}\n")
    names = list(graph.attributes)
    with open(attr_path, "w") as f:
        f.write("node\t" + "\t".join(names) + "\n")
        for i, nid in enumerate(ids):
            row = [graph.attributes[name][i] for name in names]
            f.write(nid + "\t" + "\t".join(row) + "\n")


AGE_BIN_LABELS = ("16-18", "19-21", "22+")


def bin_age(raw_age: int) -> str:
    """Map an age in years to one of the three age-group labels."""
    age = int(raw_age)
    if age < 16:
        raise ValueError(f"age {age} is below the supported minimum of 16")
    if age <= 18:
        return AGE_BIN_LABELS[0]
    if age <= 21:
        return AGE_BIN_LABELS[1]
    return AGE_BIN_LABELS[2]


def bin_age_attribute(graph: AttributedGraph, attribute: str):
    """Replace an integer-valued attribute with its age bins.

    Nodes whose value is unparsable or below 16 are dropped (with incident
    edges). Returns (new graph, dropped node count).
    """
    if attribute not in graph.attributes:
        raise ValueError(f"unknown attribute {attribute!r}")
    values = graph.attributes[attribute]
    binned = {}
    for v in range(graph.node_count):
        try:
            binned[v] = bin_age(int(values[v]))
        except ValueError:
            continue
    dropped = graph.node_count - len(binned)
    if not binned:
        raise ValueError("no nodes left after age binning")
    new_attrs = dict(graph.attributes)
    new_attrs[attribute] = [
        binned.get(v, values[v]) for v in range(graph.node_count)
    ]
    patched = AttributedGraph(
        graph.node_count,
        graph.edge_index.copy(),
        graph.edge_weight.copy(),
        new_attrs,
        list(graph.original_ids),
    )
    if dropped == 0:
        return patched, 0
    return _induced(patched, sorted(binned)), dropped


def partition_by(graph: AttributedGraph, attribute: str) -> GroupPartition:
    """Partition nodes by an attribute; groups ordered by label."""
    if attribute not in graph.attributes:
        raise ValueError(f"unknown attribute {attribute!r}")
    values = graph.attributes[attribute]
    labels = sorted(set(values))
    if len(labels) < 2:
        raise ValueError(
            f"attribute {attribute!r} has fewer than 2 distinct values"
        )
    index = {lab: i for i, lab in enumerate(labels)}
    group_of = np.array([index[v] for v in values], dtype=np.int64)
    return GroupPartition(attribute, group_of, tuple(labels))


def _induced(graph: AttributedGraph, nodes):
    """Induced subgraph on a sorted node list, IDs re-densified."""
    nodes = list(nodes)
    index = {v: i for i, v in enumerate(nodes)}
    mask = np.isin(graph.edge_index[:, 0], nodes) & np.isin(
        graph.edge_index[:, 1], nodes
    )
    kept = graph.edge_index[mask]
    remap = np.full(graph.node_count, -1, dtype=np.int64)
    remap[nodes] = np.arange(len(nodes))
    edge_index = remap[kept]
    edge_index.sort(axis=1)
    edge_weight = graph.edge_weight[mask]
    if len(edge_index):
        sort = np.lexsort((edge_index[:, 1], edge_index[:, 0]))
        edge_index, edge_weight = edge_index[sort], edge_weight[sort]
    attributes = {
        name: [vals[v] for v in nodes] for name, vals in graph.attributes.items()
    }
    original_ids = [graph.original_ids[v] for v in nodes]
    return AttributedGraph(len(nodes), edge_index, edge_weight, attributes, original_ids)


def _components(adjacency, nodes):
    """Connected components (lists of node IDs) within a node subset."""
    nodes = set(nodes)
    seen = set()
    components = []
    for start in sorted(nodes):
        if start in seen:
            continue
        comp = []
        queue = deque([start])
        seen.add(start)
        while queue:
            v = queue.popleft()
            comp.append(v)
            for u in adjacency[v]:
                u = int(u)
                if u in nodes and u not in seen:
                    seen.add(u)
                    queue.append(u)
        components.append(comp)
    return components


def select_subgraph(graph: AttributedGraph, attribute: str, allowed_values) -> AttributedGraph:
    """Induced subgraph on nodes with an allowed attribute value.

    The result is restricted to its largest connected component; size ties
    go to the component containing the smallest original node ID.
    """
    if attribute not in graph.attributes:
        raise ValueError(f"unknown attribute {attribute!r}")
    allowed = set(allowed_values)
    if not allowed:
        raise ValueError("allowed_values must be non-empty")
    values = graph.attributes[attribute]
    matching = [v for v in range(graph.node_count) if values[v] in allowed]
    if not matching:
        raise ValueError(
            f"no nodes have {attribute!r} in {sorted(allowed)}"
        )
    components = _components(graph._adj, matching)
    best = min(
        components,
        key=lambda comp: (-len(comp), min(_id_key(graph.original_ids[v]) for v in comp)),
    )
    return _induced(graph, sorted(best))


@dataclass(frozen=True)
class ControlAttributeSpec:
    """Planted second attribute for synthetic graphs.

    Classes are sampled per node from ``probs`` (uniform when None),
    independently of the block structure. ``intra_class_bonus`` is added to
    the edge probability of same-class pairs, which makes the attribute
    recoverable from structure without tying it to the blocks.
    """

    classes: int = 3
    probs: tuple = None
    intra_class_bonus: float = 0.0
    name: str = "control"


def generate_sbm(
    block_sizes,
    p_intra: float,
    p_inter: float,
    *,
    seed: int,
    control: ControlAttributeSpec = None,
    block_attribute: str = "block",
):
    """Sample a stochastic block model with planted attributes.

    The block index becomes a categorical attribute (the location-like
    grouping). Isolated nodes are removed and counted in the summary.
    Returns (graph, summary dict).
    """
    block_sizes = [int(s) for s in block_sizes]
    if any(s < 1 for s in block_sizes):
        raise ValueError("block sizes must be >= 1")
    if not 0 <= p_inter <= p_intra <= 1:
        raise ValueError("need 0 <= p_inter <= p_intra <= 1")
    n = sum(block_sizes)
    k = len(block_sizes)
    block = np.repeat(np.arange(k), block_sizes)
    rng = np.random.default_rng(seed)

    attributes = {block_attribute: [f"block{b}" for b in block]}
    if control is not None:
        if control.classes < 2:
            raise ValueError("control attribute needs >= 2 classes")
        probs = control.probs
        if probs is None:
            probs = np.full(control.classes, 1.0 / control.classes)
        else:
            probs = np.asarray(probs, dtype=np.float64)
            if len(probs) != control.classes or not np.isclose(probs.sum(), 1.0):
                raise ValueError("control probs must sum to 1 with one entry per class")
        control_of = rng.choice(control.classes, size=n, p=probs)
        attributes[control.name] = [f"class{c}" for c in control_of]

    prob = np.where(block[:, None] == block[None, :], p_intra, p_inter)
    if control is not None and control.intra_class_bonus > 0:
        same_class = control_of[:, None] == control_of[None, :]
        prob = np.clip(prob + control.intra_class_bonus * same_class, 0.0, 1.0)
    draws = rng.random((n, n))
    upper = np.triu(draws < prob, k=1)
    u_idx, v_idx = np.nonzero(upper)

    degree = np.zeros(n, dtype=np.int64)
    np.add.at(degree, u_idx, 1)
    np.add.at(degree, v_idx, 1)
    keep = np.nonzero(degree > 0)[0]
    isolated = n - len(keep)
    if len(keep) == 0:
        raise ValueError("generated graph has no edges; raise the densities")

    remap = np.full(n, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep))
    edge_index = np.stack([remap[u_idx], remap[v_idx]], axis=1)
    sort = np.lexsort((edge_index[:, 1], edge_index[:, 0]))
    edge_index = edge_index[sort]
    edge_weight = np.ones(len(edge_index), dtype=np.float64)
    kept_attrs = {
        name: [vals[v] for v in keep] for name, vals in attributes.items()
    }
    original_ids = [str(v) for v in keep]
    graph = AttributedGraph(len(keep), edge_index, edge_weight, kept_attrs, original_ids)

    summary = graph.summary()
    summary.update(
        {
            "block_sizes": block_sizes,
            "p_intra": p_intra,
            "p_inter": p_inter,
            "seed": seed,
            "isolated_removed": isolated,
        }
    )
    if control is not None:
        summary["control"] = {
            "name": control.name,
            "classes": control.classes,
            "intra_class_bonus": control.intra_class_bonus,
        }
    return graph, summary
