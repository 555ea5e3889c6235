"""Frozen values produced by scripts/make_golden.py with an independent RK4 / scipy oracle."""
from __future__ import annotations

import numpy as np
import pytest
from _shared import scenario

from conjlab.conjugacy import G, H, w_star, z_star
from conjlab.linear_flow import transition
from conjlab.nonlinear_flow import flow_y
from conjlab.regularity import continuity_budget, jacobian_G
from conjlab.stability import QSpec, find_equilibrium, lyapunov_P


def _p(name):
    return scenario(name).problem


COMPUTE = {
    "jiang_flow_t5_tau0_eta0": lambda: flow_y(_p("jiang"), 5.0, 0.0, [0.0])[0],
    "jiang_H_t4_xi0.7": lambda: H(_p("jiang"), 4.0, [0.7]),
    "jiang_G_t4_eta0.7": lambda: G(_p("jiang"), 4.0, [0.7]),
    "jiang_zstar_t2_tau2_xi0": lambda: z_star(_p("jiang"), 2.0, 2.0, [0.0])[0],
    "jiang_wstar_t3_tau3_eta0.5": lambda: w_star(_p("jiang"), 3.0, 3.0, [0.5]),
    "jiang_JG_t2_eta0.4": lambda: jacobian_G(_p("jiang"), 2.0, [0.4]).J.ravel(),
    "scaled_sin_flow_t5_tau0_eta1": lambda: flow_y(_p("scaled_sin"), 5.0, 0.0, [1.0])[0],
    "s3_rot_phi_t3_s1": lambda: transition(_p("s3_rot").linear, 3.0, 1.0).ravel(),
    "periodic_phi_t3_s1": lambda: transition(_p("periodic").linear, 3.0, 1.0).ravel(),
    "jiang_budget_eps0.1": lambda: (lambda b: [b.L, b.theta_star, b.delta])(continuity_budget(_p("jiang"), 0.1)),
    "s4_constant_equilibrium": lambda: find_equilibrium(_p("s4_constant"), [10.0], np.linspace(0, 10, 11)).ybar,
}


def test_every_entry_is_covered(golden):
    assert set(golden) == set(COMPUTE) | {"s3_rot_lyapunov_P"}


@pytest.mark.parametrize("key", sorted(COMPUTE))
def test_golden_value(golden, key):
    entry = golden[key]
    got = np.atleast_1d(np.asarray(COMPUTE[key](), dtype=float))
    want = np.asarray(entry["value"], dtype=float)
    if key == "jiang_budget_eps0.1":
        np.testing.assert_allclose(got, want, rtol=entry["tol"])
    else:
        np.testing.assert_allclose(got, want, rtol=0, atol=entry["tol"])


def test_golden_lyapunov(golden):
    entry = golden["s3_rot_lyapunov_P"]
    want = np.asarray(entry["value"]).reshape(2, 2)
    for t in entry["times"]:
        got = lyapunov_P(_p("s3_rot").linear, QSpec.scalar(1.0, 2), t)
        np.testing.assert_allclose(got, want, atol=entry["tol"])
