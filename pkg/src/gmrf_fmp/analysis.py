"""Exact solutions, walk-sum diagnostics, and error bounds.

The dense oracle inverts J by Cholesky factorization and is the reference
against which all message-passing results are measured.  Walk-summability of
a unit-diagonal model is decided by the spectral radius of R_bar = |I - J|:
rho(R_bar) < 1 guarantees loopy BP convergence, and together with the girth g
bounds the mean variance error of loopy BP by rho^g / (1 - rho).  Removing a
pseudo feedback set shrinks rho (eigenvalue interlacing), which is what makes
approximate feedback message passing converge where plain loopy BP fails.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .errors import ModelValueError, NotPositiveDefiniteError, NumericsWarning
from .graph import build_graph, connected_components, girth
from .model import (
    GaussianInfoModel,
    extract_submodel,
    partial_correlation,
    require_normalized,
)

__all__ = [
    "ExactSolution",
    "DiagnosisReport",
    "dense_oracle",
    "validate",
    "spectral_radius_abs",
    "row_sum_bounds",
    "error_bounds",
    "variance_error",
    "mean_error",
    "truncated_walk_sum",
    "diagnose",
]


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """Dense reference solution: means, marginal variances, optional full covariance."""

    means: np.ndarray
    variances: np.ndarray
    full_cov: np.ndarray | None


def dense_oracle(model: GaussianInfoModel, cov_limit: int = 200) -> ExactSolution:
    """Exact means and variances by dense Cholesky inversion of J.

    O(n^3); the full covariance matrix is kept only for n <= cov_limit.
    Raises NotPositiveDefiniteError when J is not positive definite.
    """
    a = model.to_dense()
    c, info = lapack.dpotrf(a, lower=1)
    if info != 0:
        raise NotPositiveDefiniteError(
            f"precision matrix is not positive definite (leading minor of order {info})"
        )
    means = scipy.linalg.cho_solve((c, True), model.h)
    inv, info = lapack.dpotri(c, lower=1)
    if info != 0:
        raise NotPositiveDefiniteError("inversion failed on the Cholesky factor")
    full = inv + np.tril(inv, -1).T
    variances = np.diag(full).copy()
    return ExactSolution(
        means=means,
        variances=variances,
        full_cov=full if model.n <= cov_limit else None,
    )


def validate(model: GaussianInfoModel, dense_limit: int = 4096) -> None:
    """Check positive definiteness; raises NotPositiveDefiniteError if it fails.

    Dense Cholesky up to dense_limit nodes, a Lanczos smallest-eigenvalue
    probe (deterministic all-ones start) beyond that.
    """
    if model.n <= dense_limit:
        try:
            np.linalg.cholesky(model.to_dense())
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("precision matrix is not positive definite") from None
        return
    from scipy.sparse.linalg import ArpackNoConvergence, eigsh

    j = model.to_csr()
    try:
        vals = eigsh(
            j, k=1, which="SA", v0=np.ones(model.n), maxiter=20 * model.n,
            return_eigenvectors=False,
        )
        lam_min = float(vals[0])
    except ArpackNoConvergence as exc:
        if exc.eigenvalues is not None and len(exc.eigenvalues):
            lam_min = float(exc.eigenvalues[0])
            warnings.warn(
                "smallest-eigenvalue probe did not fully converge; using best estimate",
                NumericsWarning,
                stacklevel=2,
            )
        else:
            raise NotPositiveDefiniteError(
                "could not certify positive definiteness (eigensolver stalled)"
            ) from None
    if lam_min <= 0.0:
        raise NotPositiveDefiniteError(
            f"precision matrix is not positive definite (lambda_min = {lam_min:.6g})"
        )


def _power_radius(mat, nodes: list[int], tol: float, max_iterations: int) -> float:
    """Largest |eigenvalue| of a symmetric nonnegative submatrix by power iteration.

    Norm-ratio estimates from an all-ones start converge to rho from below.
    The stop rule extrapolates the geometric tail (ratio of successive
    residual gaps), because raw gap thresholds stall when the spectral gap is
    small, as on large grids.
    """
    sub = mat[nodes][:, nodes]
    nc = len(nodes)
    x = np.full(nc, 1.0 / math.sqrt(nc))
    est_prev = 0.0
    diff_prev = -1.0
    est = 0.0
    for _ in range(max_iterations):
        y = sub @ x
        est = float(np.linalg.norm(y))
        if est == 0.0:
            return 0.0
        x = y / est
        diff = abs(est - est_prev)
        if diff_prev >= 0.0:
            if diff == 0.0 or diff <= 1e-15 * est:
                return est
            if diff <= tol * est and diff_prev > 0.0:
                ratio = diff / diff_prev
                if ratio < 1.0 and diff * ratio / (1.0 - ratio) <= tol * est:
                    return est
        est_prev = est
        diff_prev = diff
    warnings.warn(
        f"power iteration hit the cap of {max_iterations} sweeps; "
        f"returning the current estimate {est:.12g}",
        NumericsWarning,
        stacklevel=3,
    )
    return est


def spectral_radius_abs(
    model: GaussianInfoModel, tol: float = 1e-8, max_iterations: int = 100000
) -> float:
    """rho(R_bar), the spectral radius of |I - J|, by power iteration.

    Runs per connected component (the radius of a disconnected matrix is the
    max over blocks) with a deterministic all-ones start, so repeated calls
    give identical results.  Estimates approach rho from below.
    """
    require_normalized(model, "spectral_radius_abs")
    pc = partial_correlation(model)
    g = build_graph(model)
    rho = 0.0
    for comp in connected_components(g):
        if len(comp) < 2:
            continue
        rho = max(rho, _power_radius(pc.r_abs, comp, tol, max_iterations))
    return rho


def row_sum_bounds(model: GaussianInfoModel) -> tuple[float, float]:
    """(min, max) row sums of R_bar; they bracket rho(R_bar)."""
    pc = partial_correlation(model)
    return float(pc.row_sums.min()), float(pc.row_sums.max())


def variance_error(estimate: np.ndarray, exact: np.ndarray) -> float:
    """Mean absolute difference (1/n) sum_i |estimate_i - exact_i|."""
    estimate = np.asarray(estimate, dtype=np.float64)
    exact = np.asarray(exact, dtype=np.float64)
    if estimate.shape != exact.shape:
        raise ModelValueError(f"shape mismatch: {estimate.shape} vs {exact.shape}")
    return float(np.mean(np.abs(estimate - exact)))


def mean_error(estimate: np.ndarray, exact: np.ndarray) -> float:
    """Mean absolute difference of mean vectors; same metric as variance_error."""
    return variance_error(estimate, exact)


def truncated_walk_sum(model: GaussianInfoModel, i: int, j: int, max_len: int) -> float:
    """sum_{l=0}^{max_len} (R^l)_ij, the walk-sum series for P_ij cut at max_len.

    Converges to the exact covariance as max_len grows iff the model is
    walk-summable; the l = 0 term is the Kronecker delta.
    """
    require_normalized(model, "truncated_walk_sum")
    if not (0 <= i < model.n and 0 <= j < model.n):
        raise ModelValueError(f"node indices ({i}, {j}) out of range [0, {model.n})")
    if max_len < 0:
        raise ModelValueError("max_len must be non-negative")
    r = partial_correlation(model).r
    v = np.zeros(model.n)
    v[j] = 1.0
    total = 1.0 if i == j else 0.0
    for _ in range(max_len):
        v = r @ v
        total += v[i]
    return float(total)


def error_bounds(
    model: GaussianInfoModel, pseudo_fvs: Sequence[int] = ()
) -> tuple[float, float]:
    """Walk-sum variance error bounds for loopy BP and for approximate FMP.

    LBP misses exactly the non-backtracking self-return walks, which are
    longer than the girth g: error <= rho^g / (1 - rho).  Approximate FMP
    makes the same error only on the n - k retained nodes and with the
    remaining graph's radius: error <= (n - k)/n * rho_rem^g_rem /
    (1 - rho_rem).  Forests give 0; a radius >= 1 gives inf (no guarantee).
    """
    require_normalized(model, "error_bounds")
    n = model.n

    def one_bound(m: GaussianInfoModel | None, scale: float) -> float:
        if m is None:
            return 0.0
        g = girth(build_graph(m))
        if math.isinf(g):
            return 0.0
        rho = spectral_radius_abs(m)
        if rho >= 1.0:
            return math.inf
        return scale * rho**g / (1.0 - rho)

    lbp_bound = one_bound(model, 1.0)
    extract = extract_submodel(model, pseudo_fvs)
    k = len(extract.feedback)
    fmp_bound = one_bound(extract.j_sub, (n - k) / n)
    return lbp_bound, fmp_bound


@dataclass(frozen=True)
class DiagnosisReport:
    """Walk-summability summary of a normalized model.

    girth and lbp_error_bound may be math.inf (forest / no guarantee); the
    JSON form maps inf to null.
    """

    n: int
    m: int
    rho_bar: float
    rho_lower: float
    rho_upper: float
    girth: float
    walk_summable: bool
    lbp_error_bound: float

    def to_json_dict(self) -> dict:
        def opt(v: float):
            return None if math.isinf(v) else v

        return {
            "n": self.n,
            "m": self.m,
            "rho_bar": self.rho_bar,
            "rho_lower": self.rho_lower,
            "rho_upper": self.rho_upper,
            "girth": opt(self.girth),
            "walk_summable": self.walk_summable,
            "lbp_error_bound": opt(self.lbp_error_bound),
        }


def diagnose(model: GaussianInfoModel) -> DiagnosisReport:
    """One-stop diagnostics: rho(R_bar) with row-sum brackets, girth, LBP bound."""
    require_normalized(model, "diagnose")
    g = build_graph(model)
    gir = girth(g)
    rho = spectral_radius_abs(model)
    lo, hi = row_sum_bounds(model)
    if math.isinf(gir):
        bound = 0.0
    elif rho >= 1.0:
        bound = math.inf
    else:
        bound = rho**gir / (1.0 - rho)
    return DiagnosisReport(
        n=model.n,
        m=g.m,
        rho_bar=rho,
        rho_lower=lo,
        rho_upper=hi,
        girth=gir,
        walk_summable=bool(rho < 1.0),
        lbp_error_bound=bound,
    )
