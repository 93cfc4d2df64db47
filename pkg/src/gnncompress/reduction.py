"""Substitutions and multigraph reducts.

A substitution picks one representative node per refinement class; the
reduct keeps exactly the representatives, and the multiplicity of edge
v -> w sums the multiplicities from all members of v's class into w
(capped at the grade c when finite). Choosing representatives of minimal
incidence yields a reduct of minimal size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import ColorTable, ColoredMultigraph
from .refine import INF, Partition, refine

POLICIES = ("min-incidence", "first-node")


@dataclass
class Substitution:
    """Map from refinement classes to representative nodes.

    rep_of_class[k] is a member of class k; rep_of_node[v] is the
    representative of v's class, so rep_of_node[w] == w for every
    representative w.
    """

    rep_of_class: np.ndarray
    rep_of_node: np.ndarray
    depth: float
    grade: float
    policy: str


@dataclass
class ReductReport:
    original_nodes: int
    original_simple_edges: int
    reduced_nodes: int
    reduced_simple_edges: int
    rounds: int

    @property
    def node_ratio(self) -> float:
        return self.reduced_nodes / self.original_nodes

    @property
    def edge_ratio(self) -> float:
        if self.original_simple_edges == 0:
            return 1.0
        return self.reduced_simple_edges / self.original_simple_edges


def incidence(g: ColoredMultigraph, partition: Partition, w: int) -> int:
    """Number of distinct partition classes containing an in-neighbor of w."""
    if len(partition.class_of) != g.node_count:
        raise ValueError("partition does not cover the graph")
    lo, hi = g.in_indptr[w], g.in_indptr[w + 1]
    return len(np.unique(partition.class_of[g.in_src[lo:hi]]))


def incidence_all(g: ColoredMultigraph, partition: Partition) -> np.ndarray:
    """incidence() for every node at once."""
    n = g.node_count
    if not len(g.in_src):
        return np.zeros(n, dtype=np.int64)
    k = partition.num_classes
    key = g.in_dst_flat * k + partition.class_of[g.in_src]
    uniq = np.unique(key)
    return np.bincount(uniq // k, minlength=n)


def choose_substitution(g: ColoredMultigraph, partition: Partition,
                        policy: str = "min-incidence",
                        depth=None, grade=INF) -> Substitution:
    """Pick one representative per class.

    min-incidence: member with the fewest distinct in-neighbor classes
    (ties broken by smallest node id), which yields a minimal-size reduct.
    first-node: smallest node id in the class.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}; expected one of {POLICIES}")
    k = partition.num_classes
    rep_of_class = np.empty(k, dtype=np.int64)
    if policy == "first-node":
        for cid, members in enumerate(partition.classes):
            rep_of_class[cid] = members[0]
    else:
        inc = incidence_all(g, partition)
        order = np.lexsort((np.arange(g.node_count, dtype=np.int64),
                            inc, partition.class_of))
        ordered_cls = partition.class_of[order]
        if len(order):
            firsts = np.empty(len(order), dtype=bool)
            firsts[0] = True
            firsts[1:] = ordered_cls[1:] != ordered_cls[:-1]
            rep_of_class[ordered_cls[firsts]] = order[firsts]
    rep_of_node = rep_of_class[partition.class_of]
    if depth is None:
        depth = partition.round
    return Substitution(rep_of_class, rep_of_node,
                        depth=depth, grade=grade, policy=policy)


@dataclass
class Reduct:
    """Reduced multigraph plus the maps relating it to the original.

    The reduct graph uses dense ids 0..R-1; node_ids[i] is the original
    node id of reduct node i (representatives keep their identity through
    this map). rep_of_node maps every original node to its representative's
    original id, rep_index_of_node to the representative's dense id.
    """

    graph: ColoredMultigraph
    node_ids: np.ndarray
    rep_of_node: np.ndarray
    rep_index_of_node: np.ndarray
    substitution: Substitution


def reduce_graph(g: ColoredMultigraph, substitution: Substitution, grade=None) -> Reduct:
    """Build the reduct of g under a substitution.

    Edge rule: for representatives v, w the multiplicity of v -> w is the
    sum of g(v' -> w) over all v' in v's class, capped at the grade when
    finite. Only edges into representatives survive; colors are preserved.
    """
    if grade is None:
        grade = substitution.grade
    rep_of_node = substitution.rep_of_node
    node_ids = np.unique(substitution.rep_of_class)
    rep_index = np.searchsorted(node_ids, rep_of_node)

    src, dst, mult = g.out_src_flat, g.out_dst, g.out_mult
    if len(dst):
        is_rep = np.zeros(g.node_count, dtype=bool)
        is_rep[node_ids] = True
        keep = is_rep[dst]
        new_src = rep_index[src[keep]]
        new_dst = np.searchsorted(node_ids, dst[keep])
        new_mult = mult[keep]
    else:
        new_src = new_dst = new_mult = np.empty(0, dtype=np.int64)

    h = ColoredMultigraph.from_edge_arrays(
        len(node_ids), new_src, new_dst, new_mult,
        g.colors[node_ids], g.color_table)
    if not math.isinf(grade):
        h.out_mult = np.minimum(h.out_mult, int(grade))
        h.in_mult = np.minimum(h.in_mult, int(grade))
    return Reduct(h, node_ids, rep_of_node.copy(), rep_index, substitution)


def build_report(g: ColoredMultigraph, reduct: Reduct, rounds: int) -> ReductReport:
    return ReductReport(g.node_count, g.simple_edge_count,
                        reduct.graph.node_count, reduct.graph.simple_edge_count,
                        rounds)


@dataclass
class VerifyResult:
    ok: bool
    witness_node: int | None = None
    witness_round: int | None = None

    def __bool__(self) -> bool:
        return self.ok


def verify_reduct(g: ColoredMultigraph, h: ColoredMultigraph,
                  rep_index_of_node: np.ndarray, depth=INF, grade=INF) -> VerifyResult:
    """Check that every node of g shares its refinement color with its
    representative in h, at every round up to depth (up to stability for
    depth = inf).

    Runs refinement on the disjoint union of g and h and compares class
    membership round by round; refinement never mixes information across
    union components, so union classes restrict to per-graph classes.
    A failed check carries the earliest violating (node, round).
    """
    n, r = g.node_count, h.node_count
    rep_index_of_node = np.asarray(rep_index_of_node, dtype=np.int64)
    if len(rep_index_of_node) != n:
        raise ValueError("rep map must cover every original node")
    if len(rep_index_of_node) and (rep_index_of_node.min() < 0 or rep_index_of_node.max() >= r):
        raise ValueError("rep map points outside the reduct")

    # Union interning table: remap per distinct color, not per node.
    table_union = ColorTable()
    g_map = np.fromiter((table_union.intern(p) for p in g.color_table.payloads),
                        dtype=np.int64, count=len(g.color_table))
    h_map = np.fromiter((table_union.intern(p) for p in h.color_table.payloads),
                        dtype=np.int64, count=len(h.color_table))
    colors_union = np.concatenate([g_map[g.colors], h_map[h.colors]])

    src = np.concatenate([g.out_src_flat, h.out_src_flat + n])
    dst = np.concatenate([g.out_dst, h.out_dst + n])
    mult = np.concatenate([g.out_mult, h.out_mult])
    union = ColoredMultigraph.from_edge_arrays(n + r, src, dst, mult,
                                               colors_union, table_union)

    result = refine(union, depth=depth, grade=grade)
    rep_pos = rep_index_of_node + n
    for p in result.partitions:
        mismatch = p.class_of[:n] != p.class_of[rep_pos]
        if mismatch.any():
            v = int(np.flatnonzero(mismatch)[0])
            return VerifyResult(False, v, p.round)
    return VerifyResult(True)
