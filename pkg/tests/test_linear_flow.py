from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.errors import CertificateRejected
from conjlab.linear_flow import (LinearSystem, adjoint_sample, cocycle_residual, opnorm, propagate, transition,
                                 verify_linear, verify_uas)
from conjlab.models import MatrixFunction

SCALAR = LinearSystem(MatrixFunction.constant([[-1.0]]), 1, 1, 1)
ROT = LinearSystem(MatrixFunction.rot(-1, 0.5), math.sqrt(1.25), 1, 1)


@pytest.mark.parametrize("M,K,alpha,ineq", [(1, 0.5, 1, "K >= 1"), (1, 1, 0, "α > 0"), (0.5, 1, 1, "α ≤ M"),
                                            (0, 1, 1, "M > 0")])
def test_constructor_rejects_bad_constants(M, K, alpha, ineq):
    with pytest.raises(CertificateRejected) as info:
        LinearSystem(MatrixFunction.constant([[-1.0]]), M, K, alpha)
    assert info.value.inequality == ineq


def test_scalar_transition():
    assert transition(SCALAR, 3.0, 1.0)[0, 0] == pytest.approx(math.exp(-2.0), rel=1e-9)
    assert transition(SCALAR, 1.0, 3.0)[0, 0] == pytest.approx(math.exp(2.0), rel=1e-9)
    assert transition(SCALAR, 2.0, 2.0)[0, 0] == 1.0


def test_transition_rejects_negative_time():
    with pytest.raises(ValueError):
        transition(SCALAR, -1.0, 0.0)


def test_rotation_transition_closed_form():
    phi = transition(ROT, 3.0, 1.0)
    c, s = math.cos(1.0), math.sin(1.0)
    np.testing.assert_allclose(phi, math.exp(-2.0) * np.array([[c, s], [-s, c]]), atol=1e-10)
    assert opnorm(phi) == pytest.approx(math.exp(-2.0), rel=1e-8)


def test_periodic_transition_closed_form():
    sys_ = LinearSystem(MatrixFunction.sindiag([-1.5], [0.5], 1.0), 2.0, math.e, 1.5)
    want = math.exp(-3.0 + 0.5 * (math.cos(1.0) - math.cos(3.0)))
    assert transition(sys_, 3.0, 1.0)[0, 0] == pytest.approx(want, rel=1e-8)


def test_cache_returns_copies():
    a = transition(ROT, 2.0, 0.0)
    a[0, 0] = 99.0
    assert transition(ROT, 2.0, 0.0)[0, 0] != 99.0


def test_propagate_matches_matrix():
    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(propagate(ROT, 4.0, 1.5, x), transition(ROT, 4.0, 1.5) @ x, atol=1e-12)


def test_adjoint_sample_is_transition_in_second_argument():
    samp = adjoint_sample(ROT, 3.0, 0.0)
    for s in (0.0, 1.0, 2.5):
        np.testing.assert_allclose(samp(s).reshape(2, 2), transition(ROT, 3.0, s), atol=1e-9)


def test_cocycle():
    assert cocycle_residual(ROT, [(4.0, 2.0, 0.5), (1.0, 3.0, 2.0)]) < 1e-8


def test_uas_bound_check_flags_violation():
    honest = verify_uas(SCALAR, [(2.0, 0.0), (5.0, 1.0)])
    assert honest.passed
    # K = 1 with alpha = 2 overclaims the decay of exp(-(t-s))
    liar = LinearSystem(MatrixFunction.constant([[-1.0]]), 2.0, 1.0, 2.0)
    assert not verify_uas(liar, [(2.0, 0.0)]).passed


def test_verify_linear_all_pass():
    entries = verify_linear(ROT, 50.0, np.random.default_rng(0))
    assert all(e.passed for e in entries), [e for e in entries if not e.passed]
