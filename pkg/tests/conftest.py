import numpy as np
import pytest

from gnncompress import build_graph
from gnncompress.refine import Partition
from gnncompress.synth import random_graph

# Worked example: 6 nodes a1,a2,a3 (color a) and b1,b2,b3 (color b),
# 11 unit edges. Node ids: a1=0, a2=1, a3=2, b1=3, b2=4, b3=5.
FIG1_EDGES = [
    (0, 2, 1), (1, 2, 1), (2, 1, 1), (1, 0, 1), (0, 1, 1),
    (0, 3, 1), (1, 3, 1), (0, 4, 1), (2, 4, 1), (1, 5, 1), (2, 5, 1),
]
FIG1_COLORS = ["a", "a", "a", "b", "b", "b"]
A1, A2, A3, B1, B2, B3 = range(6)


@pytest.fixture
def fig1():
    return build_graph(FIG1_EDGES, FIG1_COLORS)


def star_of_stars(m: int, n: int):
    """Tree with root v (id 0), m b-colored children, each with n
    c-colored children; all edges point toward the root."""
    edges, colors = [], ["v"]
    nid = 1
    for _ in range(m):
        b = nid
        nid += 1
        colors.append("b")
        edges.append((b, 0, 1))
        for _ in range(n):
            c = nid
            nid += 1
            colors.append("c")
            edges.append((c, b, 1))
    return build_graph(edges, colors)


def partition_blocks(class_of) -> set[frozenset]:
    blocks = {}
    for v, c in enumerate(class_of):
        blocks.setdefault(int(c), set()).add(v)
    return {frozenset(b) for b in blocks.values()}


def same_partition(a, b) -> bool:
    """Equal as equivalence relations (class ids may differ)."""
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) != len(b):
        return False
    if len(a) == 0:
        return True
    pairs = {(int(x), int(y)) for x, y in zip(a, b)}
    return len(pairs) == len(set(a)) == len(set(b))


def refines(fine, coarse) -> bool:
    """Every class of `fine` lies inside one class of `coarse`."""
    mapping = {}
    for f, c in zip(fine, coarse):
        f, c = int(f), int(c)
        if mapping.setdefault(f, c) != c:
            return False
    return True


def bisimulation_partition(g) -> Partition:
    """Fixpoint oracle: split classes by the *set* of in-neighbor classes."""
    class_of = [int(c) for c in g.colors]
    while True:
        sigs = {}
        new = []
        for v in range(g.node_count):
            lo, hi = g.in_indptr[v], g.in_indptr[v + 1]
            support = frozenset(class_of[int(u)] for u in g.in_src[lo:hi])
            key = (class_of[v], support)
            if key not in sigs:
                sigs[key] = len(sigs)
            new.append(sigs[key])
        if new == class_of:
            break
        class_of = new
    return Partition(np.array(class_of, dtype=np.int64), round=-1)


def make_corpus(count: int, master_seed: int = 20240):
    """Seeded random-graph corpus: n <= 64, densities 0.05-0.5,
    1-4 initial colors, multiplicities 1-3."""
    rng = np.random.default_rng(master_seed)
    graphs = []
    for i in range(count):
        n = int(rng.integers(4, 65))
        density = float(rng.uniform(0.05, 0.5))
        m = max(1, round(density * n * (n - 1)))
        n_colors = int(rng.integers(1, 5))
        max_mult = int(rng.integers(1, 4))
        graphs.append(random_graph(n, m, n_colors, max_mult, seed=1000 + i))
    return graphs


def random_substitution(partition, rng) -> np.ndarray:
    """rep_of_class array with a uniformly random member per class."""
    reps = np.empty(partition.num_classes, dtype=np.int64)
    for cid, members in enumerate(partition.classes):
        reps[cid] = members[int(rng.integers(0, len(members)))]
    return reps
