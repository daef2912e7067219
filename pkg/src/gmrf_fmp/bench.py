"""Benchmark harness: error-vs-iteration traces for LBP and approximate FMP.

For every (grid size, seed) instance the harness computes the dense oracle
once, then re-runs each method with the iteration budget capped at
t = 1..budget and records the mean absolute variance and mean errors at each
cap.  Converged runs are recorded once and reused for the remaining caps
(larger caps cannot change a converged trajectory).  Methods:

* ``lbp``          plain loopy BP (k = 0)
* ``fmp-log``      approximate FMP, k = ceil(ln n)
* ``fmp-sqrt``     approximate FMP, k = round(sqrt n)
* ``fmp-log-bad``  k = ceil(ln n) but argmin (worst-score) selection

Rows carry rho(R_bar) of the model and of the remaining graph after removing
the method's feedback set, and NaN errors when a run broke down.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .analysis import dense_oracle, mean_error, spectral_radius_abs, variance_error
from .bp import BpOptions, lbp
from .errors import LbpBreakdownError, ModelValueError, NumericsWarning
from .fmp import approx_fmp
from .generate import GenSpec, gen_grid
from .graph import select_pseudo_fvs
from .model import GaussianInfoModel, extract_submodel

__all__ = ["BenchRecord", "CSV_HEADER", "run_bench", "records_to_csv", "write_csv"]

CSV_HEADER = "size,seed,method,k,iteration,var_error,mean_error,converged,rho,rho_rem"

METHODS = ("lbp", "fmp-log", "fmp-sqrt", "fmp-log-bad")

DEFAULT_METHODS = ("lbp", "fmp-log", "fmp-sqrt")


@dataclass(frozen=True)
class BenchRecord:
    """One point of an error trace: method x instance x iteration cap."""

    size: int
    seed: int
    method: str
    k: int
    iteration: int
    var_error: float
    mean_error: float
    converged: bool
    rho: float
    rho_rem: float

    def to_csv_row(self) -> str:
        def f(v: float) -> str:
            return format(v, ".17g")

        return (
            f"{self.size},{self.seed},{self.method},{self.k},{self.iteration},"
            f"{f(self.var_error)},{f(self.mean_error)},"
            f"{'true' if self.converged else 'false'},{f(self.rho)},{f(self.rho_rem)}"
        )


def _method_k(method: str, n: int) -> tuple[int, bool]:
    """Feedback set size and worst-selection flag for a method label."""
    if method == "lbp":
        return 0, False
    if method == "fmp-log":
        return max(1, math.ceil(math.log(n))), False
    if method == "fmp-sqrt":
        return max(1, round(math.sqrt(n))), False
    if method == "fmp-log-bad":
        return max(1, math.ceil(math.log(n))), True
    raise ModelValueError(f"unknown bench method {method!r}; known: {METHODS}")


def _run_capped(model: GaussianInfoModel, method: str, fvs: tuple[int, ...],
                cap: int, tol: float):
    """One capped run; returns (means, variances, converged) or None on breakdown."""
    options = BpOptions(max_iterations=cap, tolerance=tol, keep_messages=False)
    if method == "lbp":
        try:
            res = lbp(model, [model.h], options)
        except LbpBreakdownError:
            return None
        return res.means[0], res.variances, res.converged
    res = approx_fmp(model, fvs, options)
    if res.diagnostic is not None:
        return None
    return res.means, res.variances, res.converged


def run_bench(
    sizes: Sequence[int],
    seeds: int,
    methods: Sequence[str] = DEFAULT_METHODS,
    budget: int = 100,
    delta: float = 0.1,
    target_rho: tuple[float, float] | None = None,
    tol: float = 1e-10,
    max_size: int = 70,
) -> list[BenchRecord]:
    """Error traces over grid instances; rows sorted by (size, seed, method, iteration).

    The dense oracle caps the instance size (default side length 70).  Capped
    runs that broke down are recorded with NaN errors from the breakdown
    iteration onward.
    """
    for method in methods:
        _method_k(method, 4)  # validate labels up front
    records: list[BenchRecord] = []
    for size in sorted(set(int(s) for s in sizes)):
        if size > max_size:
            raise ModelValueError(
                f"grid size {size} exceeds the dense-oracle cap {max_size}"
            )
        for seed in range(seeds):
            model = gen_grid(
                GenSpec(topology="grid", size=size, seed=seed, delta=delta,
                        target_rho=target_rho)
            )
            oracle = dense_oracle(model, cov_limit=0)
            rho = spectral_radius_abs(model)
            for method in methods:
                k, worst = _method_k(method, model.n)
                if method == "lbp":
                    fvs: tuple[int, ...] = ()
                    rho_rem = rho
                else:
                    fvs = select_pseudo_fvs(model, k, worst=worst).nodes
                    sub = extract_submodel(model, fvs).j_sub
                    rho_rem = spectral_radius_abs(sub) if sub is not None else 0.0
                done: BenchRecord | None = None
                lbp_broke = False  # a plain-LBP trajectory that broke stays broken
                for cap in range(1, budget + 1):
                    if done is not None:
                        rec = BenchRecord(
                            size=size, seed=seed, method=method, k=len(fvs),
                            iteration=cap, var_error=done.var_error,
                            mean_error=done.mean_error, converged=True,
                            rho=rho, rho_rem=rho_rem,
                        )
                        records.append(rec)
                        continue
                    if lbp_broke:
                        out = None
                    else:
                        with warnings.catch_warnings():
                            warnings.simplefilter("ignore", NumericsWarning)
                            out = _run_capped(model, method, fvs, cap, tol)
                    if out is None:
                        # FMP reruns each cap: a round-2 breakdown at one cap
                        # need not repeat at the next (its input changes).
                        if method == "lbp":
                            lbp_broke = True
                        records.append(
                            BenchRecord(
                                size=size, seed=seed, method=method, k=len(fvs),
                                iteration=cap, var_error=math.nan,
                                mean_error=math.nan, converged=False,
                                rho=rho, rho_rem=rho_rem,
                            )
                        )
                        continue
                    means, variances, converged = out
                    rec = BenchRecord(
                        size=size, seed=seed, method=method, k=len(fvs),
                        iteration=cap,
                        var_error=variance_error(variances, oracle.variances),
                        mean_error=mean_error(means, oracle.means),
                        converged=converged,
                        rho=rho, rho_rem=rho_rem,
                    )
                    records.append(rec)
                    if converged:
                        done = rec
    records.sort(key=lambda r: (r.size, r.seed, r.method, r.iteration))
    return records


def records_to_csv(records: Iterable[BenchRecord]) -> str:
    lines = [CSV_HEADER]
    lines.extend(r.to_csv_row() for r in records)
    return "\n".join(lines) + "\n"


def write_csv(records: Iterable[BenchRecord], out: IO[str]) -> None:
    out.write(records_to_csv(records))
