"""Colored directed multigraphs with integer edge multiplicities.

Nodes are dense integers in [0, n). Each node carries a color taken from
an interning table (equal payloads <=> equal color ids). Adjacency is
stored in both directions as CSR-style arrays so that in-neighborhoods
(needed by refinement) and out-edges (needed by reduction) are both O(1)
to slice. Graphs are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import math
from typing import Iterable, Mapping

import numpy as np

from .errors import FormatError, ValidationError

# Largest multiplicity we accept; sums beyond this raise instead of wrapping.
_MULT_LIMIT = 2**62


class ColorTable:
    """Bidirectional payload <-> dense color id map (injective per run)."""

    def __init__(self):
        self._id_of = {}
        self._payloads = []

    def intern(self, payload) -> int:
        cid = self._id_of.get(payload)
        if cid is None:
            cid = len(self._payloads)
            self._id_of[payload] = cid
            self._payloads.append(payload)
        return cid

    def payload(self, cid: int):
        return self._payloads[cid]

    @property
    def payloads(self) -> list:
        return list(self._payloads)

    def __len__(self) -> int:
        return len(self._payloads)


class ColoredMultigraph:
    """Directed node-colored multigraph.

    Stored as two sorted CSR adjacency structures which encode the same
    edge multiset: ``out_*`` grouped by source (targets ascending) and
    ``in_*`` grouped by target (sources ascending). Multiplicities are
    int64 counts >= 1; an absent pair means multiplicity 0.
    """

    def __init__(self, node_count, out_indptr, out_dst, out_mult,
                 in_indptr, in_src, in_mult, colors, color_table):
        self.node_count = int(node_count)
        self.out_indptr = out_indptr
        self.out_dst = out_dst
        self.out_mult = out_mult
        self.in_indptr = in_indptr
        self.in_src = in_src
        self.in_mult = in_mult
        self.colors = colors
        self.color_table = color_table
        self._in_dst_flat = None
        self._out_src_flat = None

    # -- construction ------------------------------------------------

    @classmethod
    def from_edge_arrays(cls, n: int, src, dst, mult, color_ids, color_table) -> "ColoredMultigraph":
        """Build from parallel edge arrays; duplicate (src, dst) pairs are
        merged by summing multiplicities."""
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        mult = np.asarray(mult, dtype=np.int64)
        color_ids = np.asarray(color_ids, dtype=np.int64)
        if len(color_ids) != n:
            raise ValidationError(f"expected {n} colors, got {len(color_ids)}")
        if len(src):
            if src.min() < 0 or src.max() >= n or dst.min() < 0 or dst.max() >= n:
                raise ValidationError("edge endpoint out of range")
            if mult.min() <= 0:
                raise FormatError("edge multiplicity must be >= 1")
            # Merge duplicates: sort by (src, dst), sum runs.
            order = np.lexsort((dst, src))
            s, d, m = src[order], dst[order], mult[order]
            new_run = np.empty(len(s), dtype=bool)
            new_run[0] = True
            new_run[1:] = (s[1:] != s[:-1]) | (d[1:] != d[:-1])
            starts = np.flatnonzero(new_run)
            out_dst = d[starts]
            out_src = s[starts]
            out_mult = np.add.reduceat(m, starts)
            if out_mult.min() <= 0 or out_mult.max() >= _MULT_LIMIT:
                raise ValidationError("multiplicity overflow while merging edges")
        else:
            out_src = np.empty(0, dtype=np.int64)
            out_dst = np.empty(0, dtype=np.int64)
            out_mult = np.empty(0, dtype=np.int64)

        out_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(out_src, minlength=n), out=out_indptr[1:])

        # in-direction: same unique pairs re-sorted by (dst, src)
        in_order = np.lexsort((out_src, out_dst))
        in_src = out_src[in_order]
        in_mult = out_mult[in_order]
        in_indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(out_dst, minlength=n), out=in_indptr[1:])

        return cls(n, out_indptr, out_dst, out_mult,
                   in_indptr, in_src, in_mult, color_ids, color_table)

    # -- flattened views (cached) -------------------------------------

    @property
    def in_dst_flat(self) -> np.ndarray:
        """Target node of every in-CSR entry (parallel to in_src/in_mult)."""
        if self._in_dst_flat is None:
            degrees = np.diff(self.in_indptr)
            self._in_dst_flat = np.repeat(np.arange(self.node_count, dtype=np.int64), degrees)
        return self._in_dst_flat

    @property
    def out_src_flat(self) -> np.ndarray:
        """Source node of every out-CSR entry (parallel to out_dst/out_mult)."""
        if self._out_src_flat is None:
            degrees = np.diff(self.out_indptr)
            self._out_src_flat = np.repeat(np.arange(self.node_count, dtype=np.int64), degrees)
        return self._out_src_flat

    @property
    def simple_edge_count(self) -> int:
        return len(self.out_dst)

    def color_payload(self, v: int):
        return self.color_table.payload(int(self.colors[v]))

    def payload_per_node(self) -> list:
        return [self.color_table.payload(int(c)) for c in self.colors]

    def transpose(self) -> "ColoredMultigraph":
        """Graph with every edge reversed. transpose(transpose(G)) == G."""
        n = self.node_count
        return ColoredMultigraph.from_edge_arrays(
            n, self.out_dst, self.out_src_flat, self.out_mult,
            self.colors.copy(), self.color_table)

    def validate(self) -> None:
        """Check transposition consistency of the two adjacency directions."""
        t = self.transpose()
        same = (np.array_equal(t.out_dst, self.in_src)
                and np.array_equal(t.out_mult, self.in_mult)
                and np.array_equal(t.out_indptr, self.in_indptr))
        if not same:
            raise ValidationError("in/out adjacency encode different edge multisets")

    def __eq__(self, other) -> bool:
        if not isinstance(other, ColoredMultigraph):
            return NotImplemented
        return (self.node_count == other.node_count
                and np.array_equal(self.out_indptr, other.out_indptr)
                and np.array_equal(self.out_dst, other.out_dst)
                and np.array_equal(self.out_mult, other.out_mult)
                and self.payload_per_node() == other.payload_per_node())

    __hash__ = None

    def __repr__(self) -> str:
        return f"ColoredMultigraph(nodes={self.node_count}, simple_edges={self.simple_edge_count})"


def build_graph(edges: Iterable[tuple], colors) -> ColoredMultigraph:
    """Build a graph from (src, dst, multiplicity) triples and node colors.

    ``colors`` is either a sequence of payloads indexed by node or a mapping
    whose keys are exactly 0..n-1. Duplicate edges are merged by summing
    multiplicities; multiplicity 0 is rejected.
    """
    if isinstance(colors, Mapping):
        n = len(colors)
        if set(colors.keys()) != set(range(n)):
            raise ValidationError("color mapping must cover exactly the node ids 0..n-1")
        payloads = [colors[v] for v in range(n)]
    else:
        payloads = list(colors)
        n = len(payloads)

    table = ColorTable()
    color_ids = np.fromiter((table.intern(p) for p in payloads), dtype=np.int64, count=n)

    edges = list(edges)
    if edges:
        src = np.array([e[0] for e in edges], dtype=np.int64)
        dst = np.array([e[1] for e in edges], dtype=np.int64)
        mult = np.array([e[2] for e in edges], dtype=np.int64)
    else:
        src = dst = mult = np.empty(0, dtype=np.int64)
    return ColoredMultigraph.from_edge_arrays(n, src, dst, mult, color_ids, table)


def in_neighbors(g: ColoredMultigraph, v: int) -> list[tuple[int, int]]:
    """In-neighbors of v as (node, multiplicity) pairs, ascending by node."""
    if not 0 <= v < g.node_count:
        raise IndexError(f"node {v} out of range [0, {g.node_count})")
    lo, hi = g.in_indptr[v], g.in_indptr[v + 1]
    return [(int(u), int(m)) for u, m in zip(g.in_src[lo:hi], g.in_mult[lo:hi])]


def restrict_multiset(m: Mapping, c) -> dict:
    """Cap every multiplicity at c (c = inf is the identity; c = 1 yields
    the support set). Entries capped to 0 are dropped."""
    if math.isinf(c):
        return {k: v for k, v in m.items() if v > 0}
    c = int(c)
    return {k: min(v, c) for k, v in m.items() if min(v, c) > 0}


def graph_size(g: ColoredMultigraph) -> tuple[int, int]:
    """(number of nodes, number of simple edges): multiplicities ignored."""
    return g.node_count, g.simple_edge_count
