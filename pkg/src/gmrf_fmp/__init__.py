"""Sparse Gaussian inference by message passing with feedback sets.

The model is a Gaussian in information form (precision matrix J, potential
vector h).  On trees, belief propagation is exact.  On loopy graphs the
package offers synchronous loopy BP, an exact feedback message passing
solver built around a feedback vertex set, and an approximate variant that
uses a small pseudo feedback set chosen greedily.  Walk-summability
diagnostics and a priori error bounds round out the toolkit.
"""

from .analysis import (
    DiagnosisReport,
    ExactSolution,
    dense_oracle,
    diagnose,
    error_bounds,
    mean_error,
    row_sum_bounds,
    spectral_radius_abs,
    truncated_walk_sum,
    validate,
    variance_error,
)
from .bench import BenchRecord, records_to_csv, run_bench, write_csv
from .bp import BpOptions, BpResult, MessageState, lbp, lbp_multi, tree_bp
from .errors import (
    FeedbackSystemError,
    FvsValidationError,
    GenerationError,
    GmrfError,
    LbpBreakdownError,
    ModelFormatError,
    ModelValueError,
    NotForestError,
    NotNormalizedError,
    NotPositiveDefiniteError,
    NumericsWarning,
)
from .fmp import FmpResult, approx_fmp, exact_fmp, feedback_system
from .generate import GenSpec, gen_er, gen_grid
from .graph import (
    FvsResult,
    UndirectedGraph,
    brute_force_min_fvs,
    build_graph,
    connected_components,
    find_cycle,
    girth,
    greedy_fvs,
    is_acyclic,
    select_pseudo_fvs,
    two_core,
)
from .model import (
    GaussianInfoModel,
    denormalize_solution,
    extract_submodel,
    load_model,
    normalize,
    partial_correlation,
    read_model,
    require_normalized,
    save_model,
    write_model,
)

__version__ = "0.1.0"

__all__ = [
    "BenchRecord",
    "BpOptions",
    "BpResult",
    "DiagnosisReport",
    "ExactSolution",
    "FeedbackSystemError",
    "FmpResult",
    "FvsResult",
    "FvsValidationError",
    "GaussianInfoModel",
    "GenSpec",
    "GenerationError",
    "GmrfError",
    "LbpBreakdownError",
    "MessageState",
    "ModelFormatError",
    "ModelValueError",
    "NotForestError",
    "NotNormalizedError",
    "NotPositiveDefiniteError",
    "NumericsWarning",
    "UndirectedGraph",
    "approx_fmp",
    "brute_force_min_fvs",
    "build_graph",
    "connected_components",
    "dense_oracle",
    "denormalize_solution",
    "diagnose",
    "error_bounds",
    "exact_fmp",
    "extract_submodel",
    "feedback_system",
    "find_cycle",
    "gen_er",
    "gen_grid",
    "girth",
    "greedy_fvs",
    "is_acyclic",
    "lbp",
    "lbp_multi",
    "load_model",
    "mean_error",
    "normalize",
    "partial_correlation",
    "read_model",
    "records_to_csv",
    "require_normalized",
    "row_sum_bounds",
    "run_bench",
    "save_model",
    "select_pseudo_fvs",
    "spectral_radius_abs",
    "tree_bp",
    "truncated_walk_sum",
    "two_core",
    "validate",
    "variance_error",
    "write_csv",
    "write_model",
    "__version__",
]
