from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.regularity import (C_value, check_hessian_symmetry, check_jacobians, check_lipschitz_C,
                                check_moduli_monotone, check_uniform_continuity, continuity_budget, jacobian_G,
                                jacobian_H, lipschitz_factor_C, properness_check, theta, theta0, theta0_value,
                                theta_value)
from conjlab.conjugacy import G


def test_closed_forms(jiang):
    assert theta(jiang, 0.0) == 1.0
    assert theta(jiang, 1.0) == pytest.approx(math.exp(0.2), rel=1e-12)
    assert theta(jiang, 5.0) == pytest.approx(math.e, rel=1e-12)
    assert theta0(jiang, 3.0) == pytest.approx(0.2)
    assert lipschitz_factor_C(jiang, 2.0) == pytest.approx(math.exp(0.4), rel=1e-12)


def test_equal_exponent_branches():
    assert C_value(3.0, 1.0, 0.8, 1.0, 0.2) == pytest.approx(1.6)
    assert theta_value(2.0, 1.0, 0.8, 1.0, 0.2) == pytest.approx(1.4)
    assert theta0_value(2.0, 1.0, 0.5, 1.0, 0.2) == pytest.approx(0.2 * (math.exp(-1.0) - 1) / -0.5)


def test_budget(jiang, golden):
    b = continuity_budget(jiang, 0.1)
    L, ts, d = golden["jiang_budget_eps0.1"]["value"]
    assert (b.L, b.theta_star, b.delta) == pytest.approx((L, ts, d), rel=1e-12)
    assert not b.clamped
    c = continuity_budget(jiang, 10.0)
    assert c.clamped and c.L == 0.0 and c.delta == 5.0
    assert continuity_budget(jiang, 0.01).L == pytest.approx(5.52676, rel=1e-5)
    with pytest.raises(ValueError):
        continuity_budget(jiang, 0.0)


def test_uniform_continuity_and_lipschitz(jiang):
    b = continuity_budget(jiang, 0.1)
    rng = np.random.default_rng(2)
    pairs = [(a, a + 0.9 * b.delta) for a in rng.uniform(-2, 2, 12)]
    entries = check_uniform_continuity(jiang, 0.1, pairs, [0.0, 1.0, b.L, 50.0])
    assert all(e.passed for e in entries)
    assert check_lipschitz_C(jiang, pairs[:4], [0.5, 2.0]).passed
    assert check_moduli_monotone(jiang, 50.0).passed


def test_far_pairs_are_informational(jiang):
    entries = check_uniform_continuity(jiang, 0.1, [(0.0, 1.0)], [1.0])
    extra = [e for e in entries if e.check_id == "continuity.out_of_contract"]
    assert extra and extra[0].informational


def test_jacobian_golden(jiang, golden):
    ev = jacobian_G(jiang, 2.0, [0.4])
    assert ev.J[0, 0] == pytest.approx(golden["jiang_JG_t2_eta0.4"]["value"][0], abs=1e-7)
    assert ev.detJ > 0 and ev.fd_relative < 1e-4
    JH = jacobian_H(jiang, 2.0, G(jiang, 2.0, [0.4]))
    assert JH[0, 0] * ev.J[0, 0] == pytest.approx(1.0, abs=1e-6)
    assert jacobian_G(jiang, 0.0, [0.4]).J[0, 0] == 1.0


def test_jacobian_checks_2d(s3):
    rng = np.random.default_rng(5)
    probes = [(t, rng.uniform(-2, 2, 2)) for t in (1.0, 5.0)]
    assert all(e.passed for e in check_jacobians(s3, probes))
    assert check_hessian_symmetry(s3, probes[:1]).passed


def test_properness(jiang, s3):
    for p in (jiang, s3):
        entries = properness_check(p, 3.0, [0.1, 5.0, 50.0], n_dirs=16)
        assert entries[0].informational
        assert all(e.passed for e in entries)
