from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.errors import NonFiniteState, StepBudgetExceeded, ToleranceNotMet
from conjlab.ode_core import IntegratorConfig, integrate, quad


def test_exponential_decay_matches_closed_form():
    s = integrate(lambda t, x: -x, 0.0, [1.0], 5.0)
    assert s.terminal[0] == pytest.approx(math.exp(-5.0), rel=1e-8)


def test_backward_integration_by_reversal():
    s = integrate(lambda t, x: -x, 5.0, [math.exp(-5.0)], 0.0)
    assert s.terminal[0] == pytest.approx(1.0, rel=1e-8)
    assert s.span == (0.0, 5.0)
    assert s.grid[0] == 0.0 and s.grid[-1] == 5.0


def test_dense_output_between_steps():
    s = integrate(lambda t, x: np.array([x[1], -x[0]]), 0.0, [0.0, 1.0], 6.0)
    for t in np.linspace(0, 6, 37):
        assert s(t)[0] == pytest.approx(math.sin(t), abs=1e-8)
    np.testing.assert_allclose(s.eval_many([0.5, 2.5]), np.array([s(0.5), s(2.5)]), atol=1e-14)


def test_time_dependent_rhs():
    s = integrate(lambda t, x: np.array([math.cos(t)]), 0.0, [0.0], 3.0)
    assert s.terminal[0] == pytest.approx(math.sin(3.0), abs=1e-9)


def test_zero_span_returns_initial_state():
    s = integrate(lambda t, x: -x, 2.0, [3.0], 2.0)
    assert s.terminal[0] == 3.0


def test_sample_rejects_points_outside_span():
    s = integrate(lambda t, x: -x, 0.0, [1.0], 1.0)
    with pytest.raises(ValueError):
        s(2.0)


def test_step_budget():
    with pytest.raises(StepBudgetExceeded):
        integrate(lambda t, x: -x, 0.0, [1.0], 100.0, IntegratorConfig(max_steps=5))


def test_blow_up_is_reported():
    with pytest.raises((NonFiniteState, StepBudgetExceeded)) as info:
        integrate(lambda t, x: x * x, 0.0, [1.0], 2.0, IntegratorConfig(max_steps=20_000))
    assert info.value is not None


@pytest.mark.parametrize("kw", [{"rtol": 0}, {"atol": -1}, {"h_max": 0}, {"h_init": 0}, {"max_steps": 0}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_quad_polynomial_and_vector():
    assert quad(lambda x: x ** 3, 0.0, 2.0) == pytest.approx(4.0, abs=1e-14)
    v = quad(lambda x: np.array([math.sin(x), math.cos(x)]), 0.0, math.pi, tol=1e-12)
    np.testing.assert_allclose(v, [2.0, 0.0], atol=1e-10)
    assert quad(lambda x: x, 1.0, 0.0) == pytest.approx(-0.5)


def test_quad_budget():
    with pytest.raises(ToleranceNotMet):
        quad(lambda x: math.sin(1.0 / x) if x else 0.0, 0.0, 1.0, tol=1e-15, max_evals=500)
