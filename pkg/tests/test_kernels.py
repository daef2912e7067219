import os
import subprocess
import sys

import numpy as np
import pytest

from gmrf_fmp import BpOptions, LbpBreakdownError, lbp, spectral_radius_abs
from gmrf_fmp._kernels import available_backends, default_backend, get_sweep
from helpers import pd_model_from_structure, random_pairs, unit_model

HAS_CYTHON = "cython" in available_backends()

needs_cython = pytest.mark.skipif(not HAS_CYTHON, reason="compiled kernel not built")


def test_python_backend_always_available():
    assert "python" in available_backends()
    assert callable(get_sweep("python"))


@needs_cython
def test_cython_backend_is_default_when_built():
    if os.environ.get("GMRF_FMP_FORCE_PYTHON_KERNEL") == "1":
        pytest.skip("python kernel forced via environment")
    assert default_backend() == "cython"


def test_get_sweep_rejects_unknown_backend():
    with pytest.raises(ValueError):
        get_sweep("fortran")


@needs_cython
def test_backends_agree_bit_for_bit():
    rng = np.random.default_rng(67)
    checked = 0
    while checked < 10:
        n = int(rng.integers(3, 40))
        m = pd_model_from_structure(rng, n, random_pairs(rng, n, 4.0 / n), delta=0.3)
        if spectral_radius_abs(m) >= 0.95:
            continue
        checked += 1
        r_py = lbp(m, [m.h, m.h * 2.0], BpOptions(kernel="python", max_iterations=200))
        r_cy = lbp(m, [m.h, m.h * 2.0], BpOptions(kernel="cython", max_iterations=200))
        assert r_py.converged == r_cy.converged
        assert r_py.iterations == r_cy.iterations
        assert r_py.residual_history == r_cy.residual_history
        assert np.array_equal(r_py.means, r_cy.means)
        assert np.array_equal(r_py.variances, r_cy.variances)
        assert r_py.messages.precisions == r_cy.messages.precisions
        assert r_py.messages.potentials == r_cy.messages.potentials


@needs_cython
def test_backends_agree_on_breakdown():
    m = unit_model(3, [(0, 1, 0.6), (0, 2, 0.6), (1, 2, 0.6)])
    errors = {}
    for kernel in ("python", "cython"):
        with pytest.raises(LbpBreakdownError) as exc_info:
            lbp(m, [m.h], BpOptions(kernel=kernel))
        errors[kernel] = exc_info.value
    a, b = errors["python"], errors["cython"]
    assert (a.node, a.excluded, a.iteration) == (b.node, b.excluded, b.iteration)


def test_environment_variable_forces_python_kernel():
    code = (
        "from gmrf_fmp._kernels import default_backend\n"
        "print(default_backend())\n"
    )
    env = dict(os.environ, GMRF_FMP_FORCE_PYTHON_KERNEL="1")
    out = subprocess.run(
        [sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True
    )
    assert out.stdout.strip() == "python"
