"""Deterministic reference evaluator for aggregate-combine GNNs.

Every layer aggregates the feature vectors of a node's in-neighbors
(multiplicity-weighted) and combines the result with the node's own
feature through one affine map plus activation. A finite width c caps
how often the aggregation counts each distinct neighbor *vector*: the
multiset of vectors is restricted to at most c copies per value before
aggregating, so evaluation is invariant under that restriction. This
evaluator is the oracle behind all equivalence checks, so determinism
matters more than speed: summation runs in ascending neighbor order and
all arithmetic is float64.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .graph import ColoredMultigraph
from .refine import INF

AGG_KINDS = ("sum", "mean", "max")
ACTIVATIONS = ("relu", "identity")


@dataclass(frozen=True)
class LayerConfig:
    in_dim: int
    out_dim: int
    agg: str = "sum"
    activation: str = "relu"

    def __post_init__(self):
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError("layer dimensions must be >= 1")
        if self.agg not in AGG_KINDS:
            raise ValueError(f"unknown aggregation {self.agg!r}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class GnnConfig:
    """Topology of a GNN: layer shapes plus the aggregation width."""

    layers: tuple[LayerConfig, ...]
    width: float = INF

    def __post_init__(self):
        if len(self.layers) == 0:
            raise ValueError("a GNN needs at least one layer")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.out_dim != b.in_dim:
                raise ValueError(
                    f"layer dims do not chain: {a.out_dim} -> {b.in_dim}")
        w = self.width
        if not (math.isinf(w) or (float(w).is_integer() and w >= 1)):
            raise ValueError(f"width must be a positive integer or inf, got {w!r}")

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


def chain_config(dims: list[int], width=INF, agg: str = "sum") -> GnnConfig:
    """Convenience builder: relu between layers, identity on the last."""
    layers = []
    for i, (a, b) in enumerate(zip(dims, dims[1:])):
        act = "identity" if i == len(dims) - 2 else "relu"
        layers.append(LayerConfig(a, b, agg, act))
    return GnnConfig(tuple(layers), width)


@dataclass
class Gnn:
    """A concrete parameterization: per layer W_self (q x p), W_agg (q x p)
    and bias (q)."""

    config: GnnConfig
    w_self: list[np.ndarray]
    w_agg: list[np.ndarray]
    bias: list[np.ndarray]

    def __post_init__(self):
        L = self.config.depth
        if not (len(self.w_self) == len(self.w_agg) == len(self.bias) == L):
            raise ValueError("parameter count does not match layer count")
        for i, layer in enumerate(self.config.layers):
            q, p = layer.out_dim, layer.in_dim
            if self.w_self[i].shape != (q, p):
                raise ValueError(f"layer {i}: W_self shape {self.w_self[i].shape} != {(q, p)}")
            if self.w_agg[i].shape != (q, p):
                raise ValueError(f"layer {i}: W_agg shape {self.w_agg[i].shape} != {(q, p)}")
            if self.bias[i].shape != (q,):
                raise ValueError(f"layer {i}: bias shape {self.bias[i].shape} != {(q,)}")
            for arr in (self.w_self[i], self.w_agg[i], self.bias[i]):
                if not np.isfinite(arr).all():
                    raise ValueError(f"layer {i}: non-finite parameter")


def _aggregate(g: ColoredMultigraph, x: np.ndarray, kind: str, width) -> np.ndarray:
    n, p = x.shape
    out = np.zeros((n, p), dtype=np.float64)
    if not len(g.in_src):
        return out
    if kind == "max":
        # max ranges over the support set, so the width cap never matters
        acc = np.full((n, p), -np.inf)
        np.maximum.at(acc, g.in_dst_flat, x[g.in_src])
        has_in = np.diff(g.in_indptr) > 0
        out[has_in] = acc[has_in]
        return out
    if math.isinf(width):
        weighted = x[g.in_src] * g.in_mult[:, None].astype(np.float64)
        np.add.at(out, g.in_dst_flat, weighted)
        if kind == "mean":
            totals = np.zeros(n, dtype=np.float64)
            np.add.at(totals, g.in_dst_flat, g.in_mult.astype(np.float64))
            nz = totals > 0
            out[nz] /= totals[nz, None]
        return out
    # Finite width: count per distinct neighbor vector, capped at c.
    c = int(width)
    for v in range(n):
        lo, hi = g.in_indptr[v], g.in_indptr[v + 1]
        if lo == hi:
            continue
        counts: dict[bytes, int] = {}
        vecs: dict[bytes, np.ndarray] = {}
        for w, m in zip(g.in_src[lo:hi], g.in_mult[lo:hi]):
            key = x[w].tobytes()
            if key in counts:
                counts[key] += int(m)
            else:
                counts[key] = int(m)
                vecs[key] = x[w]
        acc = np.zeros(p, dtype=np.float64)
        total = 0
        for key, cnt in counts.items():  # first-occurrence order: ascending id
            capped = min(cnt, c)
            acc += capped * vecs[key]
            total += capped
        if kind == "mean":
            acc /= total
        out[v] = acc
    return out


def forward_layer(g: ColoredMultigraph, x: np.ndarray, layer: LayerConfig,
                  w_self: np.ndarray, w_agg: np.ndarray, bias: np.ndarray,
                  width=INF) -> np.ndarray:
    """One layer: activation(W_self·x[v] + W_agg·agg(in-neighbors) + bias).

    Empty in-neighborhoods aggregate to the zero vector for all three
    aggregation kinds.
    """
    if x.shape != (g.node_count, layer.in_dim):
        raise ValueError(f"feature shape {x.shape} != {(g.node_count, layer.in_dim)}")
    agg = _aggregate(g, x, layer.agg, width)
    z = x @ w_self.T + agg @ w_agg.T + bias
    if layer.activation == "relu":
        np.maximum(z, 0.0, out=z)
    return z


def forward(g: ColoredMultigraph, x: np.ndarray, gnn: Gnn) -> np.ndarray:
    """Compose all layers over the graph; returns the final feature matrix."""
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        raise ValueError("input features must be finite")
    for i, layer in enumerate(gnn.config.layers):
        x = forward_layer(g, x, layer, gnn.w_self[i], gnn.w_agg[i],
                          gnn.bias[i], gnn.config.width)
    return x


def sample_gnn(config: GnnConfig, seed: int) -> Gnn:
    """Draw parameters uniform in [-1, 1] from a PCG64 stream.

    Per layer, in order: W_self, then W_agg, then bias. The same seed
    yields byte-identical parameters on every platform.
    """
    rng = np.random.default_rng(seed)
    w_self, w_agg, bias = [], [], []
    for layer in config.layers:
        q, p = layer.out_dim, layer.in_dim
        w_self.append(rng.uniform(-1.0, 1.0, (q, p)))
        w_agg.append(rng.uniform(-1.0, 1.0, (q, p)))
        bias.append(rng.uniform(-1.0, 1.0, q))
    return Gnn(config, w_self, w_agg, bias)


def one_hot_features(g: ColoredMultigraph, vocab: list | None = None) -> tuple[np.ndarray, list]:
    """One-hot encoding of node colors; the default vocabulary is the
    color payloads in sorted-repr order so it is stable across graphs
    sharing the same color set."""
    if vocab is None:
        vocab = sorted(g.color_table.payloads, key=repr)
    index = {payload: i for i, payload in enumerate(vocab)}
    x = np.zeros((g.node_count, len(vocab)), dtype=np.float64)
    for v in range(g.node_count):
        x[v, index[g.color_payload(v)]] = 1.0
    return x, vocab


def gnn_to_json(gnn: Gnn) -> str:
    doc = {
        "width": "inf" if math.isinf(gnn.config.width) else int(gnn.config.width),
        "layers": [
            {"in_dim": l.in_dim, "out_dim": l.out_dim,
             "agg": l.agg, "activation": l.activation}
            for l in gnn.config.layers
        ],
        "parameters": [
            {"w_self": ws.tolist(), "w_agg": wa.tolist(), "bias": b.tolist()}
            for ws, wa, b in zip(gnn.w_self, gnn.w_agg, gnn.bias)
        ],
    }
    return json.dumps(doc, indent=1)


def gnn_from_json(text: str) -> Gnn:
    doc = json.loads(text)
    width = INF if doc["width"] == "inf" else int(doc["width"])
    layers = tuple(LayerConfig(l["in_dim"], l["out_dim"], l["agg"], l["activation"])
                   for l in doc["layers"])
    config = GnnConfig(layers, width)
    if len(doc["parameters"]) != len(layers):
        raise ValueError("parameter count does not match layer count")
    w_self = [np.asarray(pp["w_self"], dtype=np.float64) for pp in doc["parameters"]]
    w_agg = [np.asarray(pp["w_agg"], dtype=np.float64) for pp in doc["parameters"]]
    bias = [np.asarray(pp["bias"], dtype=np.float64) for pp in doc["parameters"]]
    return Gnn(config, w_self, w_agg, bias)  # shape-checked in __post_init__
