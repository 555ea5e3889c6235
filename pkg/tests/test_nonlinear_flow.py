from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.errors import CertificateRejected, MissingJacobian
from conjlab.linear_flow import LinearSystem, propagate
from conjlab.models import MatrixFunction, NonlinearTerm
from conjlab.nonlinear_flow import (ConjugacyProblem, Perturbation, fd_jacobian, flow_y, variational_y,
                                    verify_flow, verify_perturbation)

LIN = LinearSystem(MatrixFunction.constant([[-1.0]]), 1, 1, 1)


def test_kgamma_condition_enforced():
    with pytest.raises(CertificateRejected) as info:
        ConjugacyProblem(LIN, Perturbation(NonlinearTerm.scaled_sin(0.2), 2.0, 1.0))
    assert info.value.inequality == "Kγ/α < 1"
    assert info.value.value == pytest.approx(2.0)


def test_negative_constants_rejected():
    with pytest.raises(CertificateRejected):
        Perturbation(NonlinearTerm.zero(1), -0.1, 0.0)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        ConjugacyProblem(LIN, Perturbation(NonlinearTerm.scaled_sin(0.2, dim=2), 0.2, 0.3))


def test_zero_perturbation_reduces_to_linear(zero):
    eta = np.array([0.4, -1.1])
    y, _ = flow_y(zero, 3.0, 0.5, eta)
    np.testing.assert_allclose(y, propagate(zero.linear, 3.0, 0.5, eta), atol=1e-12)


def test_flow_matches_golden(jiang, sin_p, golden):
    assert flow_y(jiang, 5.0, 0.0, [0.0])[0][0] == pytest.approx(golden["jiang_flow_t5_tau0_eta0"]["value"][0],
                                                               abs=1e-8)
    assert flow_y(sin_p, 5.0, 0.0, [1.0])[0][0] == pytest.approx(
        golden["scaled_sin_flow_t5_tau0_eta1"]["value"][0], abs=1e-8)


def test_origin_is_invariant_when_f_vanishes_there(sin_p, s3):
    assert abs(flow_y(sin_p, 7.0, 0.0, [0.0])[0][0]) < 1e-14
    assert np.linalg.norm(flow_y(s3, 7.0, 2.0, [0.0, 0.0])[0]) < 1e-14


def test_variational_matches_finite_differences(jiang):
    J = variational_y(jiang, 2.0, 0.0, [0.3])
    h = 1e-5
    fd = (flow_y(jiang, 2.0, 0.0, [0.3 + h])[0] - flow_y(jiang, 2.0, 0.0, [0.3 - h])[0]) / (2 * h)
    assert J[0, 0] == pytest.approx(fd[0], rel=1e-4)
    assert variational_y(jiang, 1.0, 1.0, [0.3])[0, 0] == 1.0


def test_user_callable_perturbation_uses_fd_jacobian():
    pert = Perturbation(lambda t, y: 0.1 * np.sin(y), 0.1, 0.1)
    p = ConjugacyProblem(LIN, pert)
    np.testing.assert_allclose(pert.jacobian(0.0, [0.5]), [[0.1 * math.cos(0.5)]], rtol=1e-8)
    builtin = ConjugacyProblem(LIN, Perturbation(NonlinearTerm.scaled_sin(0.1), 0.1, 0.1))
    assert flow_y(p, 3.0, 0.0, [1.0])[0][0] == pytest.approx(flow_y(builtin, 3.0, 0.0, [1.0])[0][0], abs=1e-10)


def test_missing_jacobian():
    pert = Perturbation(lambda t, y: 0.1 * np.abs(y), 0.1, 1.0, smoothness_order=0, fd_fallback=False)
    assert not pert.has_jacobian
    with pytest.raises(MissingJacobian):
        pert.jacobian(0.0, [1.0])
    p = ConjugacyProblem(LIN, pert)
    with pytest.raises(MissingJacobian):
        variational_y(p, 1.0, 0.0, [1.0])


def test_fd_jacobian_linear_map():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(fd_jacobian(lambda t, y: A @ y, 0.0, [0.1, 0.2]), A, atol=1e-8)


def test_certificate_sampling_detects_understated_gamma():
    pert = Perturbation(NonlinearTerm.scaled_sin(0.2), 0.1, 0.2)
    entries = {e.check_id: e for e in verify_perturbation(pert, 1, 10.0, np.random.default_rng(1))}
    assert not entries["perturbation.lipschitz"].passed
    assert entries["perturbation.sup_bound"].passed


def test_verify_flow_passes(jiang, s3):
    for p in (jiang, s3):
        assert all(e.passed for e in verify_flow(p, np.random.default_rng(3)))
