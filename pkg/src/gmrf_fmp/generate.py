"""Deterministic test-model generation: grids and sparse random graphs.

Randomness comes from counter-based Philox streams split per object, so a
spec maps to exactly one model on every platform:

* edge (i, j): key = [seed, (i << 32) | j]; first draw decides presence (for
  random graphs), the next is the weight, uniform on [-1, 1].
* node i: key = [seed, (1 << 63) | i]; one draw for h_i, uniform on [-1, 1].

The raw coupling matrix J0 (zero diagonal) is shifted to J = J0 + lambda * I
with lambda = |lambda_min(J0)| + delta, which is positive definite for any
delta > 0, then normalized to unit diagonal.  The normalized model has
rho(R_bar) = rho(|J0|) / lambda, so delta tunes walk-summability: small delta
pushes rho above 1, large delta makes the model strongly walk-summable.  A
target_rho window is met by bisecting on delta.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import spectral_radius_abs
from .errors import GenerationError, ModelValueError
from .model import GaussianInfoModel, normalize

__all__ = ["GenSpec", "gen_grid", "gen_er"]

_EDGE_TAG = 0
_NODE_TAG = 1 << 63
_BISECT_STEPS = 60
_TINY_DELTA = 1e-12


@dataclass(frozen=True)
class GenSpec:
    """What to generate.

    topology "grid" uses size as the side length (size**2 nodes, nearest
    neighbor edges); "er" draws each of the size-choose-2 edges independently
    with probability c / size.  delta controls the positive definite shift;
    target_rho, when set, overrides delta by bisection so that rho(R_bar)
    lands strictly inside the window.
    """

    topology: str
    size: int
    c: float | None = None
    seed: int = 0
    delta: float = 0.1
    target_rho: tuple[float, float] | None = None

    def __post_init__(self):
        if self.topology not in ("grid", "er"):
            raise ModelValueError(f"unknown topology {self.topology!r}")
        if self.size < 2:
            raise ModelValueError(f"size must be at least 2, got {self.size}")
        if self.size >= 1 << 31:
            raise ModelValueError("size too large for the edge stream keying")
        if self.topology == "er":
            if self.c is None or self.c < 0:
                raise ModelValueError("er topology needs a non-negative c")
        if not 0 <= self.seed < 1 << 63:
            raise ModelValueError(f"seed must be in [0, 2^63), got {self.seed}")
        if self.delta <= 0:
            raise ModelValueError(f"delta must be positive, got {self.delta}")
        if self.target_rho is not None:
            lo, hi = self.target_rho
            if not 0 < lo < hi:
                raise ModelValueError(f"target_rho window must satisfy 0 < lo < hi, got {self.target_rho}")


def _stream(seed: int, tag: int) -> np.random.Generator:
    key = np.array([seed, tag], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _edge_stream(seed: int, i: int, j: int) -> np.random.Generator:
    return _stream(seed, _EDGE_TAG | (i << 32) | j)


def _node_stream(seed: int, i: int) -> np.random.Generator:
    return _stream(seed, _NODE_TAG | i)


def _grid_edges(l: int) -> list[tuple[int, int]]:
    edges = []
    for r in range(l):
        for col in range(l):
            node = r * l + col
            if col + 1 < l:
                edges.append((node, node + 1))
            if r + 1 < l:
                edges.append((node, node + l))
    edges.sort()
    return edges


def _lambda_min(n: int, edges: list[tuple[int, int, float]]) -> float:
    if not edges:
        return 0.0
    if n <= 4096:
        j0 = np.zeros((n, n))
        for i, j, w in edges:
            j0[i, j] = w
            j0[j, i] = w
        return float(np.linalg.eigvalsh(j0)[0])
    import scipy.sparse as sp
    from scipy.sparse.linalg import eigsh

    ei = np.array([e[0] for e in edges] + [e[1] for e in edges])
    ej = np.array([e[1] for e in edges] + [e[0] for e in edges])
    ew = np.array([e[2] for e in edges] * 2)
    j0 = sp.csr_matrix((ew, (ei, ej)), shape=(n, n))
    vals = eigsh(j0, k=1, which="SA", v0=np.ones(n), return_eigenvectors=False)
    return float(vals[0])


def _build(n, weighted_edges, h, lam: float) -> GaussianInfoModel:
    raw = GaussianInfoModel(
        n=n,
        diag=np.full(n, lam),
        edges=tuple(weighted_edges),
        h=h,
    )
    normalized, _ = normalize(raw)
    return normalized


def _generate(spec: GenSpec, n: int, pairs: list[tuple[int, int]]) -> GaussianInfoModel:
    weighted = []
    for i, j in pairs:
        rng = _edge_stream(spec.seed, i, j)
        if spec.topology == "er":
            if rng.random() >= spec.c / n:
                continue
        weighted.append((i, j, float(rng.uniform(-1.0, 1.0))))
    h = np.array([float(_node_stream(spec.seed, i).uniform(-1.0, 1.0)) for i in range(n)])
    shift = abs(_lambda_min(n, weighted))

    if spec.target_rho is None:
        return _build(n, weighted, h, shift + spec.delta)

    lo, hi = spec.target_rho

    def rho_at(delta: float) -> float:
        return spectral_radius_abs(_build(n, weighted, h, shift + delta))

    r_top = rho_at(_TINY_DELTA)  # essentially the supremum of achievable rho
    if r_top <= lo:
        raise GenerationError(
            f"target rho window ({lo}, {hi}) is unreachable; achievable range is (0, {r_top:.6g}]"
        )

    # rho(d_lo) > lo from here on (too hot, or in the window at a smaller
    # delta than necessary); bisection walks down from d_hi to the largest
    # delta that lands inside, which keeps lambda_min as healthy as possible
    d_lo = _TINY_DELTA
    d_hi = spec.delta
    for _ in range(_BISECT_STEPS):
        r = rho_at(d_hi)
        if r <= lo:
            break
        if r < hi:
            return _build(n, weighted, h, shift + d_hi)
        d_lo = d_hi
        d_hi *= 2.0
    else:
        raise GenerationError(
            f"could not bracket target rho window ({lo}, {hi}) by growing delta"
        )

    last_lo, last_hi = rho_at(d_lo), rho_at(d_hi)
    for _ in range(_BISECT_STEPS):
        mid = 0.5 * (d_lo + d_hi)
        r = rho_at(mid)
        if r >= hi:
            d_lo, last_lo = mid, r
        elif r <= lo:
            d_hi, last_hi = mid, r
        else:
            return _build(n, weighted, h, shift + mid)
    raise GenerationError(
        f"bisection exhausted without landing in ({lo}, {hi}); "
        f"achieved rho in [{last_hi:.6g}, {last_lo:.6g}]"
    )


def gen_grid(spec: GenSpec) -> GaussianInfoModel:
    """A size x size nearest-neighbor grid model, normalized."""
    if spec.topology != "grid":
        raise ModelValueError(f"gen_grid needs a grid spec, got {spec.topology!r}")
    return _generate(spec, spec.size * spec.size, _grid_edges(spec.size))


def gen_er(spec: GenSpec) -> GaussianInfoModel:
    """A sparse random-graph model: each pair is an edge with probability c/n."""
    if spec.topology != "er":
        raise ModelValueError(f"gen_er needs an er spec, got {spec.topology!r}")
    n = spec.size
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    return _generate(spec, n, pairs)
