"""Feedback message passing: exact and approximate inference via a feedback set.

Given a feedback set F whose removal leaves the subgraph T, inference splits
into (1) BP on T with k + 1 potential vectors (the model's h plus one column
J_{T,p} per feedback node p, giving feedback gains), (2) a dense k x k solve
of the feedback system for exact means and covariances on F, (3) BP on T
again with the potential corrected by the feedback means, and (4) a rank-k
variance correction on T from the gains and the feedback covariance.

With a full feedback vertex set both BP rounds run on a forest
(:func:`exact_fmp`), so every mean and variance is exact, at
O(k^2 n) cost.  With a smaller pseudo feedback set the rounds use loopy BP
(:func:`approx_fmp`); if those converge, means everywhere and variances on F
are still exact, and variance errors on T shrink with the walk-sum spectral
radius of the remaining graph.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .bp import BpOptions, BpResult, lbp_multi, tree_bp
from .errors import (
    FeedbackSystemError,
    FvsValidationError,
    LbpBreakdownError,
    NumericsWarning,
)
from .graph import build_graph, find_cycle
from .model import (
    GaussianInfoModel,
    SubmodelExtract,
    extract_submodel,
    require_normalized,
)

__all__ = ["FmpResult", "feedback_system", "exact_fmp", "approx_fmp"]

# Gains from a converged round 1 make the feedback system symmetric up to
# roundoff; a larger skew means round 1 stopped early.
ASYMMETRY_WARN = 1e-6


@dataclass(frozen=True, eq=False)
class FmpResult:
    """Output of a feedback message passing run.

    means/variances cover all n nodes in original numbering.  feedback_cov
    and feedback_means are the dense solution on the feedback set (in
    feedback_set order) and gains holds the k feedback-gain vectors over the
    retained nodes.  round1/round2 count BP iterations per round (1 each for
    the exact tree rounds).  diagnostic carries the failure reason when a
    loopy round broke down; means/variances are NaN in that case.
    """

    means: np.ndarray
    variances: np.ndarray
    feedback_set: tuple[int, ...]
    converged: bool
    feedback_cov: np.ndarray
    feedback_means: np.ndarray
    gains: np.ndarray
    round1_iterations: int
    round2_iterations: int
    diagnostic: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "feedback_set": list(self.feedback_set),
            "converged": self.converged,
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "feedback_cov": self.feedback_cov.tolist(),
            "iterations": {
                "round1": self.round1_iterations,
                "round2": self.round2_iterations,
            },
        }


def feedback_system(
    model: GaussianInfoModel,
    extract: SubmodelExtract,
    gains: np.ndarray,
    tree_means: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Assemble the k x k feedback system (J_F_hat, h_F_hat).

    J_F_hat[p, q] = J_pq - sum_{j in N(p) & T} J_pj * gains[q][j]
    h_F_hat[p]    = h_p  - sum_{j in N(p) & T} J_pj * tree_means[j]

    The result is symmetrized; skew beyond ASYMMETRY_WARN (possible only
    with non-converged gains) raises a NumericsWarning.
    """
    fb = extract.feedback
    k = len(fb)
    gains = np.asarray(gains, dtype=np.float64).reshape(k, len(extract.kept))

    entry: dict[tuple[int, int], float] = {}
    fset = set(fb)
    for i, j, w in model.edges:
        if i in fset and j in fset:
            entry[(i, j)] = w
            entry[(j, i)] = w

    j_f = np.empty((k, k))
    h_f = np.empty(k)
    for a, p in enumerate(fb):
        col_p = extract.cross_columns[p]
        for b, q in enumerate(fb):
            base = model.diag[p] if p == q else entry.get((p, q), 0.0)
            j_f[a, b] = base - np.dot(col_p, gains[b])
        h_f[a] = model.h[p] - np.dot(col_p, tree_means)

    if k:
        skew = float(np.max(np.abs(j_f - j_f.T)))
        if skew > ASYMMETRY_WARN:
            warnings.warn(
                f"feedback system asymmetry {skew:.3e}; round-1 gains look unconverged",
                NumericsWarning,
                stacklevel=2,
            )
    j_f = (j_f + j_f.T) / 2.0
    return j_f, h_f


def _solve_feedback(j_f: np.ndarray, h_f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k = j_f.shape[0]
    if k == 0:
        return np.zeros((0, 0)), np.zeros(0)
    if not (np.all(np.isfinite(j_f)) and np.all(np.isfinite(h_f))):
        raise FeedbackSystemError("feedback system has non-finite entries (round 1 diverged)")
    try:
        factor = scipy.linalg.cho_factor(j_f, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise FeedbackSystemError(f"feedback system is not positive definite: {exc}") from None
    cov = scipy.linalg.cho_solve(factor, np.eye(k))
    cov = (cov + cov.T) / 2.0
    means = scipy.linalg.cho_solve(factor, h_f)
    return cov, means


def _assemble(
    model: GaussianInfoModel,
    extract: SubmodelExtract,
    tree_means: np.ndarray,
    tree_vars: np.ndarray,
    gains: np.ndarray,
    cov: np.ndarray,
    fb_means: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    n = model.n
    k = len(extract.feedback)
    means = np.empty(n)
    variances = np.empty(n)
    kept = list(extract.kept)
    if kept:
        means[kept] = tree_means
        if k:
            # rank-k walk-sum correction: sum_pq g^p_i cov_pq g^q_i
            variances[kept] = tree_vars + np.einsum("pi,pq,qi->i", gains, cov, gains)
        else:
            variances[kept] = tree_vars
    for a, p in enumerate(extract.feedback):
        means[p] = fb_means[a]
        variances[p] = cov[a, a]
    return means, variances


def _revised_potential(extract: SubmodelExtract, fb_means: np.ndarray) -> np.ndarray:
    h_t = np.array(extract.j_sub.h)
    for a, p in enumerate(extract.feedback):
        h_t -= fb_means[a] * extract.cross_columns[p]
    return h_t


def exact_fmp(model: GaussianInfoModel, fvs: Sequence[int]) -> FmpResult:
    """Exact marginals using a full feedback vertex set.

    The remaining graph must be a forest; otherwise the set is rejected with
    one offending cycle.  Both BP rounds are exact tree passes, so the result
    always converges (or raises, when the model is not positive definite).
    """
    require_normalized(model, "exact_fmp")
    extract = extract_submodel(model, fvs)
    k = len(extract.feedback)

    if extract.j_sub is None:
        # feedback set covers every node: the dense solve is the whole answer
        j_f, h_f = feedback_system(model, extract, np.zeros((k, 0)), np.zeros(0))
        cov, fb_means = _solve_feedback(j_f, h_f)
        means, variances = _assemble(
            model, extract, np.zeros(0), np.zeros(0), np.zeros((k, 0)), cov, fb_means
        )
        return FmpResult(
            means=means,
            variances=variances,
            feedback_set=extract.feedback,
            converged=True,
            feedback_cov=cov,
            feedback_means=fb_means,
            gains=np.zeros((k, 0)),
            round1_iterations=0,
            round2_iterations=0,
        )

    sub_graph = build_graph(extract.j_sub)
    cycle = find_cycle(sub_graph)
    if cycle is not None:
        original = [extract.kept[c] for c in cycle]
        raise FvsValidationError(
            f"not a feedback vertex set: removing it leaves cycle {original}",
            cycle=original,
        )

    potentials = [extract.j_sub.h] + [extract.cross_columns[p] for p in extract.feedback]
    round1 = tree_bp(extract.j_sub, potentials)
    gains = round1.means[1:]
    j_f, h_f = feedback_system(model, extract, gains, round1.means[0])
    cov, fb_means = _solve_feedback(j_f, h_f)
    round2 = tree_bp(extract.j_sub, [_revised_potential(extract, fb_means)])
    means, variances = _assemble(
        model, extract, round2.means[0], round1.variances, gains, cov, fb_means
    )
    return FmpResult(
        means=means,
        variances=variances,
        feedback_set=extract.feedback,
        converged=True,
        feedback_cov=cov,
        feedback_means=fb_means,
        gains=gains,
        round1_iterations=round1.iterations,
        round2_iterations=round2.iterations,
    )


def _failed_result(
    model: GaussianInfoModel,
    extract: SubmodelExtract,
    diagnostic: str,
    round1_iterations: int,
    round2_iterations: int,
) -> FmpResult:
    k = len(extract.feedback)
    nan = float("nan")
    return FmpResult(
        means=np.full(model.n, nan),
        variances=np.full(model.n, nan),
        feedback_set=extract.feedback,
        converged=False,
        feedback_cov=np.full((k, k), nan),
        feedback_means=np.full(k, nan),
        gains=np.full((k, len(extract.kept)), nan),
        round1_iterations=round1_iterations,
        round2_iterations=round2_iterations,
        diagnostic=diagnostic,
    )


def approx_fmp(
    model: GaussianInfoModel,
    pseudo_fvs: Sequence[int],
    options: BpOptions | None = None,
) -> FmpResult:
    """Feedback message passing with loopy BP rounds on the remaining graph.

    pseudo_fvs may leave cycles behind.  When both rounds converge, means are
    exact everywhere and variances are exact on the feedback set; elsewhere
    the walk-sum variance correction applies.  converged=False marks rounds
    that ran out of iterations (numbers still reported) while a breakdown or
    an indefinite feedback system yields NaN results with a diagnostic.

    With an empty pseudo_fvs this reduces to plain lbp on the model, bit for
    bit (the second round re-runs the same trajectory).
    """
    if options is None:
        options = BpOptions()
    require_normalized(model, "approx_fmp")
    extract = extract_submodel(model, pseudo_fvs)
    k = len(extract.feedback)
    run_options = replace(options, keep_messages=False)

    if extract.j_sub is None:
        j_f, h_f = feedback_system(model, extract, np.zeros((k, 0)), np.zeros(0))
        cov, fb_means = _solve_feedback(j_f, h_f)
        means, variances = _assemble(
            model, extract, np.zeros(0), np.zeros(0), np.zeros((k, 0)), cov, fb_means
        )
        return FmpResult(
            means=means,
            variances=variances,
            feedback_set=extract.feedback,
            converged=True,
            feedback_cov=cov,
            feedback_means=fb_means,
            gains=np.zeros((k, 0)),
            round1_iterations=0,
            round2_iterations=0,
        )

    potentials = [extract.j_sub.h] + [extract.cross_columns[p] for p in extract.feedback]
    try:
        round1 = lbp_multi(extract.j_sub, potentials, run_options)
    except LbpBreakdownError as exc:
        return _failed_result(model, extract, f"round 1 {exc}", exc.iteration, 0)

    gains = round1.means[1:]
    try:
        j_f, h_f = feedback_system(model, extract, gains, round1.means[0])
        cov, fb_means = _solve_feedback(j_f, h_f)
    except FeedbackSystemError as exc:
        return _failed_result(model, extract, str(exc), round1.iterations, 0)

    if k:
        h_revised = _revised_potential(extract, fb_means)
    else:
        h_revised = extract.j_sub.h
    try:
        round2 = lbp_multi(extract.j_sub, [h_revised], run_options)
    except LbpBreakdownError as exc:
        return _failed_result(model, extract, f"round 2 {exc}", round1.iterations, exc.iteration)

    means, variances = _assemble(
        model, extract, round2.means[0], round1.variances, gains, cov, fb_means
    )
    return FmpResult(
        means=means,
        variances=variances,
        feedback_set=extract.feedback,
        converged=round1.converged and round2.converged,
        feedback_cov=cov,
        feedback_means=fb_means,
        gains=gains,
        round1_iterations=round1.iterations,
        round2_iterations=round2.iterations,
    )
