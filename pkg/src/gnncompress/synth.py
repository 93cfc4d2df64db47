"""Seeded random graph generation for benchmarks and test corpora."""

from __future__ import annotations

import numpy as np

from .graph import ColorTable, ColoredMultigraph


def random_graph(n: int, m: int, n_colors: int = 1, max_mult: int = 1,
                 seed: int = 0) -> ColoredMultigraph:
    """Random directed multigraph: m edge slots drawn uniformly over
    ordered node pairs (duplicates merge), colors and multiplicities
    uniform. Identical seeds give identical graphs."""
    rng = np.random.default_rng(seed)
    src = rng.integers(0, n, m)
    dst = rng.integers(0, n, m)
    mult = rng.integers(1, max_mult + 1, m)
    payloads = rng.integers(0, n_colors, n)
    table = ColorTable()
    colors = np.fromiter((table.intern(int(p)) for p in payloads), dtype=np.int64, count=n)
    return ColoredMultigraph.from_edge_arrays(n, src, dst, mult, colors, table)


def bench_graph(total_size: int, density: float, seed: int = 0) -> ColoredMultigraph:
    """Single-color random graph with n + m ~= total_size at m/n = density."""
    n = max(2, round(total_size / (1.0 + density)))
    m = max(1, total_size - n)
    return random_graph(n, m, n_colors=1, max_mult=1, seed=seed)
