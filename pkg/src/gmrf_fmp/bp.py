"""Gaussian belief propagation in information form.

Messages between neighbors carry a precision part dJ and, per potential
vector, a mean part dh:

    dJ(i->j) = -J_ij^2 / a,   dh(i->j) = -J_ij * b / a,

where a = J_ii + sum of incoming dJ to i from neighbors other than j and
b = h_i + the matching sum of incoming dh.  On a forest one upward and one
downward pass make the node marginals exact (:func:`tree_bp`).  On loopy
graphs the synchronous fixed-point iteration (:func:`lbp`) yields exact means
and walk-sum variance approximations when it converges.

Several potential vectors can share one precision recursion because dJ does
not depend on h; :func:`lbp_multi` exposes that reuse.  Each potential
freezes at the first iteration where both the precision and its own mean
residual drop below tolerance, so per-potential outputs are bit-identical to
solo runs.

All sums accumulate over neighbors in ascending index order, which makes
results reproducible across runs and across the two sweep kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import _kernels
from .errors import (
    LbpBreakdownError,
    ModelValueError,
    NotForestError,
    NotPositiveDefiniteError,
)
from .graph import build_graph, find_cycle
from .model import GaussianInfoModel, require_normalized

__all__ = ["BpOptions", "MessageState", "BpResult", "tree_bp", "lbp", "lbp_multi"]


@dataclass(frozen=True)
class BpOptions:
    """Iteration controls for loopy BP.

    kernel picks the sweep backend ("python" or "cython", None = best
    available); keep_messages skips the final message-map export when False.
    Only the synchronous (Jacobi) schedule exists in this implementation.
    """

    max_iterations: int = 1000
    tolerance: float = 1e-10
    synchronous: bool = True
    kernel: str | None = None
    keep_messages: bool = True


@dataclass(frozen=True, eq=False)
class MessageState:
    """Final messages, keyed by directed edge (i, j) meaning i -> j."""

    precisions: dict[tuple[int, int], float]
    potentials: tuple[dict[tuple[int, int], float], ...]


@dataclass(frozen=True, eq=False)
class BpResult:
    """Marginals from a BP run.

    means has one row per potential vector.  variances belong to the first
    potential's stopping point (for tree BP and converged loopy runs they are
    simply the fixed-point variances).  residual_history records the max
    message change per sweep; it is empty for tree BP, which is a direct
    two-pass solve.
    """

    means: np.ndarray
    variances: np.ndarray
    converged: bool
    iterations: int
    residual_history: tuple[float, ...]
    messages: MessageState | None = None


def _coerce_potentials(model: GaussianInfoModel, potentials) -> np.ndarray:
    if isinstance(potentials, np.ndarray):
        hs = potentials.reshape(1, -1) if potentials.ndim == 1 else potentials
        hs = np.ascontiguousarray(hs, dtype=np.float64).copy()
    else:
        rows = list(potentials)
        if not rows:
            raise ModelValueError("at least one potential vector is required")
        hs = np.ascontiguousarray(np.stack([np.asarray(r, dtype=np.float64) for r in rows]))
    if hs.ndim != 2 or hs.shape[1] != model.n:
        raise ModelValueError(
            f"potential vectors must have length {model.n}, got shape {hs.shape}"
        )
    if hs.shape[0] < 1:
        raise ModelValueError("at least one potential vector is required")
    if not np.all(np.isfinite(hs)):
        raise ModelValueError("potential vectors must be finite")
    return hs


# ---------------------------------------------------------------------------
# Exact BP on forests


def tree_bp(model: GaussianInfoModel, potentials) -> BpResult:
    """Exact marginals on a forest by one upward and one downward pass.

    Shares the precision passes across all potential vectors.  Raises
    NotForestError on cyclic graphs and NotPositiveDefiniteError when any
    collected precision fails to stay positive (the model is not positive
    definite on this forest).
    """
    require_normalized(model, "tree_bp")
    hs = _coerce_potentials(model, potentials)
    P = hs.shape[0]
    n = model.n
    g = build_graph(model)
    cycle = find_cycle(g)
    if cycle is not None:
        raise NotForestError(f"tree_bp requires a forest; found cycle {cycle}")

    wmap: dict[tuple[int, int], float] = {}
    for i, j, w in model.edges:
        if w == 0.0:
            continue
        wmap[(i, j)] = w
        wmap[(j, i)] = w

    # BFS forest, roots in ascending order
    parent = [-1] * n
    order: list[int] = []
    seen = [False] * n
    for root in range(n):
        if seen[root]:
            continue
        seen[root] = True
        order.append(root)
        qi = len(order) - 1
        while qi < len(order):
            u = order[qi]
            qi += 1
            for v in g.neighbors[u]:
                if not seen[v]:
                    seen[v] = True
                    parent[v] = u
                    order.append(v)

    hl = hs.tolist()
    up_j = [0.0] * n  # message a node sends to its parent
    up_h = [[0.0] * n for _ in range(P)]
    down_j = [0.0] * n  # message a node receives from its parent
    down_h = [[0.0] * n for _ in range(P)]

    def collect(i: int, skip: int) -> float:
        # precision at i from all neighbors except `skip`, ascending order
        a = 1.0
        par = parent[i]
        for nb in g.neighbors[i]:
            if nb == skip:
                continue
            a = a + (down_j[i] if nb == par else up_j[nb])
        return a

    def collect_h(i: int, skip: int, p: int) -> float:
        b = hl[p][i]
        par = parent[i]
        uh = up_h[p]
        dh = down_h[p]
        for nb in g.neighbors[i]:
            if nb == skip:
                continue
            b = b + (dh[i] if nb == par else uh[nb])
        return b

    for i in reversed(order):
        par = parent[i]
        if par < 0:
            continue
        a = collect(i, par)
        if a <= 0.0:
            raise NotPositiveDefiniteError(
                f"model is not positive definite on this forest (node {i})"
            )
        we = wmap[(i, par)]
        up_j[i] = -we * we / a
        for p in range(P):
            b = collect_h(i, par, p)
            up_h[p][i] = -we * b / a

    for i in order:
        for c in g.neighbors[i]:
            if parent[c] != i:
                continue
            a = collect(i, c)
            if a <= 0.0:
                raise NotPositiveDefiniteError(
                    f"model is not positive definite on this forest (node {i})"
                )
            we = wmap[(i, c)]
            down_j[c] = -we * we / a
            for p in range(P):
                b = collect_h(i, c, p)
                down_h[p][c] = -we * b / a

    means = np.empty((P, n))
    variances = np.empty(n)
    for i in range(n):
        a = collect(i, -1)
        if a <= 0.0:
            raise NotPositiveDefiniteError(
                f"model is not positive definite on this forest (node {i})"
            )
        variances[i] = 1.0 / a
        for p in range(P):
            means[p, i] = collect_h(i, -1, p) / a

    precisions: dict[tuple[int, int], float] = {}
    pots: tuple[dict[tuple[int, int], float], ...] = tuple({} for _ in range(P))
    for i in range(n):
        par = parent[i]
        if par < 0:
            continue
        precisions[(i, par)] = up_j[i]
        precisions[(par, i)] = down_j[i]
        for p in range(P):
            pots[p][(i, par)] = up_h[p][i]
            pots[p][(par, i)] = down_h[p][i]

    return BpResult(
        means=means,
        variances=variances,
        converged=True,
        iterations=1,
        residual_history=(),
        messages=MessageState(precisions=precisions, potentials=pots),
    )


# ---------------------------------------------------------------------------
# Loopy BP


@dataclass(eq=False)
class _LbpPlan:
    """Directed-edge structure for the sweep kernels.

    Directed edges are sorted by (source, destination); in_edge groups the
    ids of incoming edges per destination, sources ascending, with in_ptr
    offsets.  erev maps every edge to its reverse.
    """

    n: int
    E: int
    in_ptr: np.ndarray
    in_edge: np.ndarray
    esrc: np.ndarray
    edst: np.ndarray
    erev: np.ndarray
    w: np.ndarray
    diag: np.ndarray

    @cached_property
    def in_ptr_list(self) -> list[int]:
        return self.in_ptr.tolist()

    @cached_property
    def in_edge_list(self) -> list[int]:
        return self.in_edge.tolist()

    @cached_property
    def diag_list(self) -> list[float]:
        return self.diag.tolist()


def _build_plan(model: GaussianInfoModel) -> _LbpPlan:
    ei, ej, ew = model.edge_arrays
    mask = ew != 0.0
    ei, ej, ew = ei[mask], ej[mask], ew[mask]
    src = np.concatenate([ei, ej])
    dst = np.concatenate([ej, ei])
    ww = np.concatenate([ew, ew])
    order = np.lexsort((dst, src))
    src = np.ascontiguousarray(src[order], dtype=np.int64)
    dst = np.ascontiguousarray(dst[order], dtype=np.int64)
    ww = np.ascontiguousarray(ww[order], dtype=np.float64)
    E = src.shape[0]
    index = {(int(src[e]), int(dst[e])): e for e in range(E)}
    erev = np.fromiter(
        (index[(int(dst[e]), int(src[e]))] for e in range(E)), dtype=np.int64, count=E
    )
    in_edge = np.ascontiguousarray(np.lexsort((src, dst)), dtype=np.int64)
    counts = np.bincount(dst, minlength=model.n) if E else np.zeros(model.n, dtype=np.int64)
    in_ptr = np.zeros(model.n + 1, dtype=np.int64)
    in_ptr[1:] = np.cumsum(counts)
    return _LbpPlan(
        n=model.n,
        E=E,
        in_ptr=in_ptr,
        in_edge=in_edge,
        esrc=src,
        edst=dst,
        erev=erev,
        w=ww,
        diag=np.array(model.diag, dtype=np.float64),
    )


def _marginals(plan: _LbpPlan, h_row: np.ndarray, dj: np.ndarray, dh_row: np.ndarray):
    """Node marginals from a message state: mean b/a and variance 1/a.

    Non-converged loopy states can produce non-positive marginal precisions;
    those yield negative (or infinite) variances rather than an error.
    """
    n = plan.n
    ip = plan.in_ptr_list
    ie = plan.in_edge_list
    dg = plan.diag_list
    djl = dj.tolist()
    dhl = dh_row.tolist()
    hl = h_row.tolist()
    means = np.empty(n)
    variances = np.empty(n)
    for i in range(n):
        a = dg[i]
        b = hl[i]
        for t in range(ip[i], ip[i + 1]):
            fe = ie[t]
            a = a + djl[fe]
            b = b + dhl[fe]
        if a == 0.0:
            variances[i] = math.inf
            means[i] = math.nan
        else:
            variances[i] = 1.0 / a
            means[i] = b / a
    return means, variances


def lbp(model: GaussianInfoModel, potentials, options: BpOptions | None = None) -> BpResult:
    """Synchronous loopy BP from zero messages.

    Every sweep updates all directed messages in parallel from the previous
    iterate.  A potential vector freezes at the first sweep where the
    precision residual and its own mean residual are both <= tolerance; the
    run converges when every potential has frozen.  Raises LbpBreakdownError
    as soon as any collected message precision is <= 0, which is a different
    outcome from running out of iterations (converged=False).
    """
    if options is None:
        options = BpOptions()
    if not options.synchronous:
        raise NotImplementedError("only the synchronous schedule is implemented")
    if options.max_iterations < 1:
        raise ModelValueError("max_iterations must be at least 1")
    if options.tolerance <= 0.0:
        raise ModelValueError("tolerance must be positive")
    require_normalized(model, "lbp")
    hs = _coerce_potentials(model, potentials)
    P = hs.shape[0]
    n = model.n
    plan = _build_plan(model)
    sweep = _kernels.get_sweep(options.kernel)
    E = plan.E

    dj_prev = np.zeros(E)
    dj_next = np.zeros(E)
    dh_prev = np.zeros((P, E))
    dh_next = np.zeros((P, E))
    res_h = np.zeros(P)
    active = np.ones(P, dtype=np.uint8)

    means = np.zeros((P, n))
    variances = np.zeros(n)
    frozen_h: dict[int, np.ndarray] = {}
    history: list[float] = []
    tol = options.tolerance
    converged = False
    iterations = options.max_iterations

    for t in range(1, options.max_iterations + 1):
        res_j, bad = sweep(
            plan.in_ptr, plan.in_edge, plan.esrc, plan.erev, plan.w, plan.diag,
            hs, dj_prev, dh_prev, active, dj_next, dh_next, res_h,
        )
        if bad >= 0:
            raise LbpBreakdownError(int(plan.esrc[bad]), int(plan.edst[bad]), t)
        dj_prev, dj_next = dj_next, dj_prev
        dh_prev, dh_next = dh_next, dh_prev

        residual = res_j
        for p in range(P):
            if active[p] and res_h[p] > residual:
                residual = res_h[p]
        history.append(float(residual))

        if res_j <= tol:
            for p in range(P):
                if active[p] and res_h[p] <= tol:
                    means[p], var_p = _marginals(plan, hs[p], dj_prev, dh_prev[p])
                    if p == 0:
                        variances[:] = var_p
                    frozen_h[p] = dh_prev[p].copy()
                    active[p] = 0
            if not active.any():
                converged = True
                iterations = t
                break

    for p in range(P):
        if active[p]:
            means[p], var_p = _marginals(plan, hs[p], dj_prev, dh_prev[p])
            if p == 0:
                variances[:] = var_p

    messages = None
    if options.keep_messages:
        src_l = plan.esrc.tolist()
        dst_l = plan.edst.tolist()
        djl = dj_prev.tolist()
        precisions = {(src_l[e], dst_l[e]): djl[e] for e in range(E)}
        pots = []
        for p in range(P):
            row = frozen_h.get(p, dh_prev[p]).tolist()
            pots.append({(src_l[e], dst_l[e]): row[e] for e in range(E)})
        messages = MessageState(precisions=precisions, potentials=tuple(pots))

    return BpResult(
        means=means,
        variances=variances,
        converged=converged,
        iterations=iterations,
        residual_history=tuple(history),
        messages=messages,
    )


def lbp_multi(model: GaussianInfoModel, potentials, options: BpOptions | None = None) -> BpResult:
    """Loopy BP over several potential vectors with one shared precision pass.

    Same engine as :func:`lbp`; the name marks call sites that rely on the
    shared-structure economics (the two feedback message passing rounds).
    Per-potential means are bit-identical to separate lbp runs; variances
    belong to the first potential's stopping point.
    """
    return lbp(model, potentials, options)
