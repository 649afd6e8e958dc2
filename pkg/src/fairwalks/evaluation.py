"""Attribute prediction from embeddings and the three fairness metrics.

Evaluation runs repeated stratified 50/50 labeled/unlabeled splits. Per
split, label propagation predicts the sensitive attribute and (when
configured) a control attribute; scores are one-vs-rest F1 per sensitive
group for the sensitive attribute, and macro-F1 of the control prediction
within each sensitive group. The fold-averaged score vectors feed:

  awareness    max over groups (how recoverable the sensitive attribute is)
  disparity    population variance over groups (how uneven recovery is)
  performance  mean over groups of the control scores
"""

import json
from dataclasses import dataclass, field

import numpy as np

from fairwalks.graph import GroupPartition
from fairwalks.propagation import build_propagation_graph, predict, propagate
from fairwalks.seeds import rng_for

REPORT_SCHEMA_VERSION = 1


@dataclass
class GroupScores:
    """Per-group scores in [0, 1] for one predicted attribute."""

    attribute: str
    values: np.ndarray
    flags: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if np.any(self.values < 0) or np.any(self.values > 1):
            raise ValueError("scores must lie in [0, 1]")


def binary_f1(true_positive: int, false_positive: int, false_negative: int) -> float:
    """F1 from confusion counts; 0 when there is nothing to score."""
    denom = 2 * true_positive + false_positive + false_negative
    if denom == 0:
        return 0.0
    return 2 * true_positive / denom


def one_vs_rest_f1(truth, predicted, positive) -> float:
    truth = np.asarray(truth)
    predicted = np.asarray(predicted)
    tp = int(np.sum((truth == positive) & (predicted == positive)))
    fp = int(np.sum((truth != positive) & (predicted == positive)))
    fn = int(np.sum((truth == positive) & (predicted != positive)))
    return binary_f1(tp, fp, fn)


def per_group_f1(
    predicted,
    truth,
    partition: GroupPartition,
    eval_set,
) -> GroupScores:
    """One-vs-rest F1 per group of the partition, over the eval set.

    ``predicted`` and ``truth`` are group indices of the SAME partition
    (the sensitive attribute predicts itself); group i is scored with
    "is in group i" as the positive class.
    """
    eval_set = np.asarray(eval_set, dtype=np.int64)
    predicted = np.asarray(predicted)[eval_set]
    truth = np.asarray(truth)[eval_set]
    scores = np.zeros(partition.num_groups)
    flags = []
    for i in range(partition.num_groups):
        scores[i] = one_vs_rest_f1(truth, predicted, i)
        if not np.any(truth == i) and not np.any(predicted == i):
            flags.append(f"group {partition.group_labels[i]}: no positives, F1 set to 0")
    return GroupScores(partition.attribute, scores, flags)


def per_group_macro_f1(
    predicted,
    truth,
    sensitive: GroupPartition,
    eval_set,
    attribute: str,
) -> GroupScores:
    """Macro-F1 of a prediction, restricted to each sensitive group.

    Within each sensitive group, the macro average runs over the classes
    that actually occur in that group's eval-set truth.
    """
    eval_set = np.asarray(eval_set, dtype=np.int64)
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    scores = np.zeros(sensitive.num_groups)
    flags = []
    for i in range(sensitive.num_groups):
        members = eval_set[sensitive.group_of[eval_set] == i]
        if len(members) == 0:
            flags.append(f"group {sensitive.group_labels[i]}: empty eval set")
            continue
        t = truth[members]
        p = predicted[members]
        present = np.unique(t)
        scores[i] = float(
            np.mean([one_vs_rest_f1(t, p, c) for c in present])
        )
    return GroupScores(attribute, scores, flags)


def awareness(scores) -> float:
    """Max per-group score: how well the best-recovered group is exposed."""
    return float(np.max(np.asarray(scores, dtype=np.float64)))


def disparity(scores) -> float:
    """Population variance of the per-group scores."""
    values = np.asarray(scores, dtype=np.float64)
    return float(np.mean((values - values.mean()) ** 2))


def performance(control_scores) -> float:
    """Mean per-group control-attribute score."""
    return float(np.mean(np.asarray(control_scores, dtype=np.float64)))


def stratified_split(partition: GroupPartition, labeled_fraction: float, rng):
    """Random labeled/unlabeled node split, stratified by group.

    The labeled set has exactly ceil(n * fraction) nodes; per-group quotas
    follow largest-remainder rounding, clamped so every group keeps at
    least one node on each side. Groups smaller than 2 cannot be split.
    """
    sizes = partition.sizes()
    n = len(partition.group_of)
    for i, size in enumerate(sizes):
        if size < 2:
            raise ValueError(
                f"cannot stratify: group {partition.group_labels[i]!r} has {size} node(s)"
            )
    target = int(np.ceil(n * labeled_fraction))
    quotas = sizes * labeled_fraction
    base = np.clip(np.floor(quotas).astype(int), 1, sizes - 1)
    remainders = quotas - np.floor(quotas)
    order = np.argsort(-remainders, kind="stable")
    # largest-remainder rounding toward the exact target, bounded so every
    # group keeps one node on each side; infeasible deficits are tolerated
    deficit = target - base.sum()
    for step in range(8 * len(order)):
        if deficit == 0:
            break
        g = order[step % len(order)]
        if deficit > 0 and base[g] < sizes[g] - 1:
            base[g] += 1
            deficit -= 1
        elif deficit < 0 and base[g] > 1:
            base[g] -= 1
            deficit += 1

    labeled = []
    for i in range(partition.num_groups):
        members = np.nonzero(partition.group_of == i)[0]
        pick = rng.permutation(len(members))[: base[i]]
        labeled.append(members[pick])
    labeled = np.sort(np.concatenate(labeled))
    mask = np.zeros(n, dtype=bool)
    mask[labeled] = True
    unlabeled = np.nonzero(~mask)[0]
    return labeled, unlabeled


@dataclass
class EvaluationReport:
    """Cross-validated group scores plus the three aggregate metrics."""

    sensitive_attribute: str
    control_attribute: str
    group_labels: tuple
    group_sizes: list
    folds: int
    q_folds: np.ndarray       # (folds, C) sensitive-attribute scores
    qstar_folds: np.ndarray   # (folds, C) control scores, empty when no control
    q_mean: np.ndarray
    qstar_mean: np.ndarray
    awareness: float
    disparity: float
    performance: float
    warnings: list
    config: dict

    def to_dict(self) -> dict:
        has_control = bool(self.control_attribute)
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "sensitive_attribute": self.sensitive_attribute,
            "control_attribute": self.control_attribute,
            "group_labels": list(self.group_labels),
            "group_sizes": [int(s) for s in self.group_sizes],
            "folds": self.folds,
            "q_folds": self.q_folds.tolist(),
            "qstar_folds": self.qstar_folds.tolist(),
            "q_mean": self.q_mean.tolist(),
            "qstar_mean": self.qstar_mean.tolist(),
            "awareness": self.awareness,
            "disparity": self.disparity,
            "performance": self.performance if has_control else None,
            "warnings": list(self.warnings),
            "config": self.config,
        }

    def to_json(self) -> str:
        """Canonical serialization; identical inputs give identical bytes."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def cross_validate(
    vectors,
    sensitive: GroupPartition,
    control: GroupPartition = None,
    folds: int = 25,
    labeled_fraction: float = 0.5,
    k: int = 10,
    sigma=None,
    max_iters: int = 1000,
    tol: float = 1e-6,
    seed: int = 0,
    config_echo: dict = None,
) -> EvaluationReport:
    """Repeated stratified-split evaluation of embedding predictiveness.

    Each fold draws an independent split (seeded per fold index), clamps
    the labeled half, propagates, and scores the unlabeled half. Metrics
    are computed on the fold-averaged score vectors.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    n = len(vectors)
    c_groups = sensitive.num_groups
    if n < 2 * c_groups:
        raise ValueError("need at least 2 nodes per sensitive group")

    pg = build_propagation_graph(vectors, k=k, sigma=sigma)
    warnings = []

    q_folds = np.zeros((folds, c_groups))
    qstar_folds = np.zeros((folds, c_groups)) if control is not None else np.zeros((folds, 0))
    for f in range(folds):
        rng = rng_for(seed, "fold", f)
        labeled, unlabeled = stratified_split(sensitive, labeled_fraction, rng)

        seed_labels = np.full(n, -1, dtype=np.int64)
        seed_labels[labeled] = sensitive.group_of[labeled]
        probs, warn = propagate(pg, seed_labels, c_groups, max_iters, tol)
        q = per_group_f1(predict(probs), sensitive.group_of, sensitive, unlabeled)
        q_folds[f] = q.values
        warnings.extend(f"fold {f}: {w}" for w in warn + q.flags)

        if control is not None:
            ctrl_labels = np.full(n, -1, dtype=np.int64)
            ctrl_labels[labeled] = control.group_of[labeled]
            cprobs, cwarn = propagate(pg, ctrl_labels, control.num_groups, max_iters, tol)
            qstar = per_group_macro_f1(
                predict(cprobs),
                control.group_of,
                sensitive,
                unlabeled,
                control.attribute,
            )
            qstar_folds[f] = qstar.values
            warnings.extend(f"fold {f} (control): {w}" for w in cwarn + qstar.flags)

    q_mean = q_folds.mean(axis=0)
    qstar_mean = qstar_folds.mean(axis=0) if control is not None else np.zeros(0)
    config = dict(config_echo or {})
    config.update(
        {
            "folds": folds,
            "labeled_fraction": labeled_fraction,
            "knn_k": k,
            "sigma": pg.sigma,
            "propagation_max_iters": max_iters,
            "propagation_tol": tol,
            "eval_seed": seed,
            "f1_scheme": "one-vs-rest on unlabeled nodes; control macro-F1 per group",
            "metric_aggregation": "metrics over fold-averaged scores",
        }
    )
    return EvaluationReport(
        sensitive_attribute=sensitive.attribute,
        control_attribute=control.attribute if control is not None else "",
        group_labels=sensitive.group_labels,
        group_sizes=[int(s) for s in sensitive.sizes()],
        folds=folds,
        q_folds=q_folds,
        qstar_folds=qstar_folds,
        q_mean=q_mean,
        qstar_mean=qstar_mean,
        awareness=awareness(q_mean),
        disparity=disparity(q_mean),
        performance=performance(qstar_mean) if control is not None else float("nan"),
        warnings=warnings,
        config=config,
    )
