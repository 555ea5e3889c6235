from __future__ import annotations

import os
import subprocess
import sys

import numpy as np
import pytest

from conjlab import kernels
from conjlab.kernels import KIND_ADJ, KIND_LIN, KIND_NL, KIND_VAR, KIND_WAUG
from conjlab.ode_core import IntegratorConfig, integrate_model

from _shared import scenario

needs_cython = pytest.mark.skipif("cython" not in kernels.available_backends(), reason="extension not built")


def _y0(kind, n, eta):
    if kind in (KIND_LIN, KIND_ADJ):
        return np.eye(n).ravel()
    if kind == KIND_VAR:
        return np.concatenate((eta, np.eye(n).ravel()))
    if kind == KIND_WAUG:
        return np.concatenate((eta, np.zeros(n)))
    return eta


@needs_cython
@pytest.mark.parametrize("name", ["jiang", "s3_rot", "periodic", "scaled_sin"])
@pytest.mark.parametrize("kind", [KIND_LIN, KIND_ADJ, KIND_NL, KIND_VAR, KIND_WAUG])
@pytest.mark.parametrize("span", [(0.0, 3.0), (4.0, 0.5)])
def test_backend_parity(name, kind, span):
    p = scenario(name).problem
    cfg = IntegratorConfig()
    eta = np.linspace(0.7, -0.3, p.dim)
    y0 = _y0(kind, p.dim, eta)
    a = integrate_model(kind, p.model, span[0], y0, span[1], cfg, backend="python")
    b = integrate_model(kind, p.model, span[0], y0, span[1], cfg, backend="cython")
    # both backends run the same scheme; operation order differs, so agreement
    # is asserted at the integration tolerance, not bit for bit
    tol = dict(rtol=10 * cfg.rtol, atol=10 * cfg.atol)
    np.testing.assert_allclose(a.terminal, b.terminal, **tol)
    t = 0.5 * (span[0] + span[1])
    np.testing.assert_allclose(a(t), b(t), **tol)
    assert abs(a.sgrid.size - b.sgrid.size) <= max(2, 0.02 * a.sgrid.size)


def test_unknown_backend_rejected():
    p = scenario("jiang").problem
    with pytest.raises(ValueError):
        integrate_model(KIND_NL, p.model, 0.0, [0.1], 1.0, backend="fortran")


def test_env_var_forces_python_fallback():
    env = dict(os.environ, CONJLAB_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import conjlab.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_python_backend_computes_maps():
    env = dict(os.environ, CONJLAB_PURE_PYTHON="1")
    code = ("from conjlab.scenario import load_file; from conjlab.conjugacy import H, G;"
            "p = load_file('jiang').problem; print(abs(float(G(p, 2.0, H(p, 2.0, [0.7]))[0]) - 0.7))")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert float(out.stdout) < 1e-6
