from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.conjugacy import H
from conjlab.errors import NewtonDiverged
from conjlab.linear_flow import LinearSystem
from conjlab.models import MatrixFunction, NonlinearTerm
from conjlab.nonlinear_flow import ConjugacyProblem, Perturbation, flow_sample
from conjlab.stability import (EquilibriumCandidate, NotFound, QSpec, check_matrix_identity, check_P_bounds,
                               check_translated_origin, check_uniqueness, equilibrium_entries, equilibrium_limits,
                               find_equilibrium, lyapunov_certificate, lyapunov_derivative_check, lyapunov_P,
                               translate_system, uas_empirical)

GRID = np.linspace(0.0, 10.0, 11)


def test_origin_equilibrium(sin_p):
    e = find_equilibrium(sin_p, [0.3], GRID)
    assert isinstance(e, EquilibriumCandidate)
    assert abs(e.ybar[0]) < 1e-12 and e.residual_ode <= 1e-12 and e.residual_fpe <= 1e-12


def test_jiang_has_no_equilibrium(jiang):
    e = find_equilibrium(jiang, [0.5], GRID)
    assert isinstance(e, NotFound)
    assert e.max_residual > 1e-3
    assert equilibrium_entries(jiang, e)[0].informational


def test_constant_forcing_equilibrium(s4):
    a = find_equilibrium(s4, [10.0], GRID)
    b = find_equilibrium(s4, [-10.0], GRID)
    assert a.ybar[0] == pytest.approx(0.3, abs=1e-10)
    assert check_uniqueness(s4, a, b).measured <= 1e-10
    assert all(e.passed for e in equilibrium_entries(s4, a))
    assert all(e.passed for e in equilibrium_limits(s4, a, [1.0, 5.0, 10.0, 20.0]))
    assert H(s4, 20.0, [0.0])[0] == pytest.approx(0.3, abs=1e-6)


def test_newton_divergence():
    lin = LinearSystem(MatrixFunction.constant([[-1.0]]), 1, 1, 1)
    # a wrong derivative sends every Newton step uphill
    p = ConjugacyProblem(lin, Perturbation(lambda t, y: 0.5 * np.sin(y) + 1.0, 0.5, 1.5,
                                           Df=lambda t, y: np.array([[2.0]])))
    with pytest.raises(NewtonDiverged):
        find_equilibrium(p, [0.0], GRID)


def test_translation(s4, sin_p):
    e = find_equilibrium(s4, [1.0], GRID)
    q = translate_system(s4, e)
    assert q.mu == pytest.approx(0.6) and q.gamma == s4.gamma
    assert check_translated_origin(q, np.linspace(0, 50, 64)).passed
    assert np.allclose(q.pert(1.0, np.array([0.7])), 0.0)
    shifted = translate_system(sin_p, EquilibriumCandidate(np.array([0.4]), 0.0, 0.0))
    assert check_translated_origin(shifted, np.linspace(0, 50, 64)).passed


def test_uas_empirical(sin_p, zero):
    entries = uas_empirical(sin_p, [1e-3], [2.0], [[1.9], [-1.5], [0.5]], horizon=20.0)
    assert entries[0].passed and 0 < entries[0].measured < 20
    inside = uas_empirical(sin_p, [3.0], [2.0], [[1.9]], horizon=5.0)
    assert inside[0].measured == 0.0
    lin = uas_empirical(zero, [1e-2], [1.0], [[0.9, 0.0]], horizon=20.0)
    assert lin[0].measured <= math.log(1.0 / 1e-2) + 0.05


def test_lyapunov_scalar():
    sys_ = LinearSystem(MatrixFunction.constant([[-1.0]]), 1, 1, 1)
    for t in (0.0, 2.0):
        assert lyapunov_P(sys_, QSpec.scalar(1.0, 1), t)[0, 0] == pytest.approx(0.5, abs=1e-8)
    assert lyapunov_P(sys_, QSpec.scalar(3.0, 1), 0.0)[0, 0] == pytest.approx(1.5, abs=3e-8)
    cert = lyapunov_certificate(sys_, QSpec.scalar(1.0, 1))
    assert cert.p_minus == cert.p_plus == 0.5 and cert.decay_margin == 1.0


def test_lyapunov_rotation(s3, golden):
    cert = lyapunov_certificate(s3.linear, QSpec.scalar(1.0, 2), gamma=s3.gamma)
    want = np.array(golden["s3_rot_lyapunov_P"]["value"]).reshape(2, 2)
    for t in golden["s3_rot_lyapunov_P"]["times"]:
        np.testing.assert_allclose(cert.P_eval(t), want, atol=1e-8)
    assert all(e.passed for e in check_P_bounds(cert, [0.0, 1.0, 5.0]))
    assert check_matrix_identity(s3.linear, cert, [0.0, 1.0, 5.0]).measured <= 1e-5


def test_lyapunov_decrease(sin_p):
    cert = lyapunov_certificate(sin_p.linear, QSpec.scalar(1.0, 1), gamma=sin_p.gamma)
    assert cert.decay_margin == pytest.approx(0.8)
    trajs = [flow_sample(sin_p, 0.0, [x], 10.0) for x in np.linspace(-2, 2, 8)]
    assert all(e.passed for e in lyapunov_derivative_check(cert, sin_p, trajs))


def test_qspec_validation():
    with pytest.raises(ValueError):
        QSpec.constant([[1.0, 0.0], [0.0, -1.0]])
    q = QSpec.constant([[2.0, 1.0], [1.0, 2.0]])
    assert (q.q_minus, q.q_plus) == pytest.approx((1.0, 3.0))
