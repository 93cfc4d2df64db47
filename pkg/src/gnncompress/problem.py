"""Learning problems and their exact compression.

A problem is a featured graph, a training set with per-node targets, a
loss kind, and a GNN hypothesis. Compressing refines the graph at the
hypothesis depth and width, collapses each refinement class onto one
representative, and rewrites the training set as integer-weighted
targets on the representatives: the total loss of any GNN from the
hypothesis space is identical on both problems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .gnn import Gnn, GnnConfig, forward, sample_gnn
from .graph import ColoredMultigraph
from .refine import INF, refine
from .reduction import choose_substitution, reduce_graph

LOSS_KINDS = ("xent", "sq")


def _target_key(target):
    """Canonical grouping/sorting key for a target value."""
    if isinstance(target, np.ndarray):
        return target.tobytes()
    return str(target)


def pointwise_loss(loss_kind: str, target, prediction: np.ndarray, vocab: list[str]) -> float:
    """Loss of one prediction against one stored target.

    xent: softmax cross-entropy of the logits against the target label's
    index in the (sorted) label vocabulary. sq: squared euclidean error.
    """
    if loss_kind == "xent":
        z = prediction
        m = z.max()
        logsumexp = m + math.log(np.exp(z - m).sum())
        return float(logsumexp - z[vocab.index(target)])
    diff = prediction - target
    return float(diff @ diff)


@dataclass
class LearningProblem:
    """Original (uncompressed) node-labelling problem."""

    graph: ColoredMultigraph
    features: np.ndarray
    train: dict[int, object]
    loss_kind: str
    hypothesis: GnnConfig | None = None

    def __post_init__(self):
        n = self.graph.node_count
        self.features = np.asarray(self.features, dtype=np.float64)
        if self.features.ndim != 2 or self.features.shape[0] != n:
            raise ValidationError(f"feature matrix must be ({n}, p)")
        if not np.isfinite(self.features).all():
            raise ValidationError("features must be finite")
        if self.loss_kind not in LOSS_KINDS:
            raise ValidationError(f"unknown loss kind {self.loss_kind!r}")
        for v, target in self.train.items():
            if not 0 <= v < n:
                raise ValidationError(f"training node {v} out of range")
            if self.loss_kind == "sq":
                if not isinstance(target, np.ndarray):
                    self.train[v] = np.asarray(target, dtype=np.float64)
            elif not isinstance(target, str):
                raise ValidationError("classification targets must be label tokens")
        if self.loss_kind == "sq" and self.train:
            dims = {t.shape for t in self.train.values()}
            if len(dims) > 1:
                raise ValidationError(f"regression targets of mixed dimension: {dims}")
        if self.hypothesis is not None:
            if self.hypothesis.input_dim != self.features.shape[1]:
                raise ValidationError("hypothesis input dim does not match features")
            if self.train:
                q = self.hypothesis.output_dim
                if self.loss_kind == "sq":
                    dim = len(next(iter(self.train.values())))
                    if dim != q:
                        raise ValidationError(
                            f"regression targets have dimension {dim}, hypothesis outputs {q}")
                elif len(self.label_vocab) > q:
                    raise ValidationError(
                        f"{len(self.label_vocab)} labels exceed hypothesis output dim {q}")

    @property
    def label_vocab(self) -> list[str]:
        if self.loss_kind != "xent":
            return []
        return sorted({t for t in self.train.values()})


@dataclass
class CompressedProblem:
    """Reduced problem: reduct graph plus weighted training targets.

    rep_of_node maps every original node to its representative's index in
    the reduct; node_ids maps reduct indices back to original node ids.
    train_weighted[rep] lists (target, weight) pairs with positive integer
    weights; the weights of one pair count the training nodes of the
    original class carrying that target, so weights sum to |T|.
    """

    graph: ColoredMultigraph
    node_ids: np.ndarray
    rep_of_node: np.ndarray
    train_weighted: dict[int, list[tuple[object, int]]]
    depth: float
    grade: float
    policy: str
    loss_kind: str | None = None
    rounds: int = 0
    features: np.ndarray | None = field(default=None, compare=False)
    hypothesis: GnnConfig | None = field(default=None, compare=False)

    @property
    def total_weight(self) -> int:
        return sum(w for pairs in self.train_weighted.values() for _, w in pairs)

    @property
    def label_vocab(self) -> list[str]:
        if self.loss_kind != "xent":
            return []
        return sorted({t for pairs in self.train_weighted.values() for t, _ in pairs})

    def equivalent_to(self, other: "CompressedProblem") -> bool:
        """Structural equality of graph, map, and weighted training set."""
        if self.graph != other.graph:
            return False
        if not (np.array_equal(self.node_ids, other.node_ids)
                and np.array_equal(self.rep_of_node, other.rep_of_node)):
            return False
        if set(self.train_weighted) != set(other.train_weighted):
            return False
        for v, pairs in self.train_weighted.items():
            a = sorted(((_target_key(t), w) for t, w in pairs))
            b = sorted(((_target_key(t), w) for t, w in other.train_weighted[v]))
            if a != b:
                return False
        return (self.depth, self.grade, self.policy) == (other.depth, other.grade, other.policy)


def _check_features_consistent(problem: LearningProblem) -> None:
    """Every initial color class must carry one single feature row, or
    refinement classes could merge feature-distinct nodes."""
    g, x = problem.graph, problem.features
    for cid in range(len(g.color_table)):
        members = np.flatnonzero(g.colors == cid)
        if len(members) > 1:
            if not (x[members] == x[members[0]]).all():
                raise ValidationError(
                    f"initial color {g.color_table.payload(cid)!r} mixes distinct "
                    "feature vectors; colors must separate differing features")


def compress_problem(problem: LearningProblem, policy: str = "min-incidence",
                     depth=None, grade=None) -> CompressedProblem:
    """Compress a learning problem at (grade, depth).

    Defaults come from the hypothesis (its layer count and width); both
    may be overridden, and inf is allowed for either. The training set
    maps through the substitution and targets aggregate into
    (target, count) pairs per representative.
    """
    if depth is None:
        if problem.hypothesis is None:
            raise ValueError("no hypothesis set: pass depth explicitly")
        depth = problem.hypothesis.depth
    if grade is None:
        grade = problem.hypothesis.width if problem.hypothesis is not None else INF
    _check_features_consistent(problem)

    g = problem.graph
    result = refine(g, depth=depth, grade=grade)
    partition = result.final
    sub = choose_substitution(g, partition, policy, depth=depth, grade=grade)
    red = reduce_graph(g, sub)

    grouped: dict[int, dict] = {}
    for v, target in problem.train.items():
        rep = int(red.rep_index_of_node[v])
        bucket = grouped.setdefault(rep, {})
        key = _target_key(target)
        if key in bucket:
            bucket[key][1] += 1
        else:
            bucket[key] = [target, 1]
    train_weighted = {
        rep: [(t, w) for t, w in (bucket[k] for k in sorted(bucket))]
        for rep, bucket in sorted(grouped.items())
    }

    rounds = result.stable_round if result.stable_round is not None else int(depth)
    return CompressedProblem(
        graph=red.graph,
        node_ids=red.node_ids,
        rep_of_node=red.rep_index_of_node,
        train_weighted=train_weighted,
        depth=depth, grade=grade, policy=policy,
        loss_kind=problem.loss_kind,
        rounds=rounds,
        features=problem.features[red.node_ids],
        hypothesis=problem.hypothesis,
    )


def evaluate_loss(problem: LearningProblem, gnn: Gnn) -> float:
    """Total training loss of a GNN on the original problem."""
    out = forward(problem.graph, problem.features, gnn)
    vocab = problem.label_vocab
    return sum(pointwise_loss(problem.loss_kind, problem.train[v], out[v], vocab)
               for v in sorted(problem.train))


def evaluate_compressed_loss(cp: CompressedProblem, gnn: Gnn,
                             features: np.ndarray | None = None) -> float:
    """Total training loss on the compressed problem: weighted sum of the
    per-target losses at each representative."""
    if features is None:
        features = cp.features
    if features is None:
        raise ValueError("compressed problem has no feature matrix")
    out = forward(cp.graph, features, gnn)
    vocab = cp.label_vocab
    total = 0.0
    for rep in sorted(cp.train_weighted):
        for target, weight in cp.train_weighted[rep]:
            total += weight * pointwise_loss(cp.loss_kind, target, out[rep], vocab)
    return total


@dataclass
class EquivalenceReport:
    n_gnns: int
    tolerance: float
    max_loss_discrepancy: float
    max_output_discrepancy: float
    passed: bool
    approximate: bool
    note: str = ""


def equivalence_report(problem: LearningProblem, cp: CompressedProblem,
                       n_gnns: int = 5, seed: int = 0, tolerance: float = 1e-6,
                       config: GnnConfig | None = None) -> EquivalenceReport:
    """Sample GNNs from the hypothesis space and compare both problems.

    Reports the worst relative loss discrepancy and the worst relative
    per-node output discrepancy max_v |L(G)(v) - L(G')(rep(v))|_inf over
    all samples. When the hypothesis is deeper or wider than the
    compression, equality is not guaranteed and the report is flagged
    approximate.
    """
    if config is None:
        config = problem.hypothesis
    if config is None:
        raise ValueError("no hypothesis config available")
    approximate = config.depth > cp.depth or config.width > cp.grade
    note = ""
    if config.width > cp.grade:
        note = "approximate: hypothesis width exceeds compression grade"
    elif config.depth > cp.depth:
        note = "approximate: hypothesis depth exceeds compression depth"

    max_loss = 0.0
    max_out = 0.0
    for i in range(n_gnns):
        gnn = sample_gnn(config, seed + i)
        out_g = forward(problem.graph, problem.features, gnn)
        out_h = forward(cp.graph, cp.features, gnn)
        diff = np.abs(out_g - out_h[cp.rep_of_node])
        scale = 1.0 + np.abs(out_g).max(axis=1)
        max_out = max(max_out, float((diff.max(axis=1) / scale).max()) if len(diff) else 0.0)

        vocab = problem.label_vocab
        loss_g = sum(pointwise_loss(problem.loss_kind, problem.train[v], out_g[v], vocab)
                     for v in sorted(problem.train))
        loss_h = 0.0
        for rep in sorted(cp.train_weighted):
            for target, weight in cp.train_weighted[rep]:
                loss_h += weight * pointwise_loss(cp.loss_kind, target, out_h[rep], vocab)
        max_loss = max(max_loss, abs(loss_g - loss_h) / (1.0 + abs(loss_g)))

    passed = max_loss <= tolerance and max_out <= tolerance
    return EquivalenceReport(n_gnns, tolerance, max_loss, max_out,
                             passed, approximate, note)
