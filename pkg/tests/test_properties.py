"""Invariants checked on randomly drawn inputs."""
from __future__ import annotations

import math

import numpy as np
from _shared import scenario
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conjlab.conjugacy import G, H
from conjlab.linear_flow import transition
from conjlab.regularity import continuity_budget, lipschitz_factor_C, theta, theta0
from conjlab.scenario import parse_value

SLOW = settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
times = st.floats(0.0, 20.0, allow_nan=False)
coords = st.floats(-3.0, 3.0, allow_nan=False)
shipped_1d = st.sampled_from(["jiang", "s4_constant", "periodic"])


@SLOW
@given(name=shipped_1d, t=times, x=coords)
def test_roundtrip(name, t, x):
    p = scenario(name).problem
    assert abs(H(p, t, G(p, t, [x]))[0] - x) <= 1e-6
    assert abs(G(p, t, H(p, t, [x]))[0] - x) <= 1e-6


@SLOW
@given(t=times, x=coords, y=coords)
def test_proximity_2d(t, x, y):
    p = scenario("s3_rot").problem
    v = np.array([x, y])
    assert np.linalg.norm(H(p, t, v) - v) <= p.proximity_radius + 1e-7
    assert np.linalg.norm(G(p, t, v) - v) <= p.proximity_radius + 1e-7


@SLOW
@given(name=st.sampled_from(["s3_rot", "periodic"]), a=times, b=times, c=times)
def test_cocycle_and_determinant(name, a, b, c):
    # forward-ordered triples; a backward leg amplifies absolute-tolerance error by exp(alpha*span)
    a, b, c = sorted((a, b, c), reverse=True)
    sys_ = scenario(name).linear
    lhs = transition(sys_, a, c)
    rhs = transition(sys_, a, b) @ transition(sys_, b, c)
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
    assert np.max(np.abs(lhs - rhs)) <= 1e-7 * scale
    assert np.linalg.det(transition(sys_, a, c)) > 0


@settings(max_examples=200, deadline=None)
@given(s=st.floats(0.0, 100.0), ds=st.floats(0.0, 50.0))
def test_moduli_monotone(s, ds):
    p = scenario("jiang").problem
    assert theta(p, s) <= theta(p, s + ds) * (1 + 1e-12)
    assert lipschitz_factor_C(p, s) <= lipschitz_factor_C(p, s + ds) * (1 + 1e-12)
    assert theta0(p, s) >= 0


@settings(max_examples=200, deadline=None)
@given(eps=st.floats(1e-4, 50.0))
def test_budget_shape(eps):
    b = continuity_budget(scenario("jiang").problem, eps)
    assert b.L >= 0 and 0 < b.delta <= eps / 2 + 1e-15
    assert b.theta_star >= 1.0


@given(x=st.floats(allow_nan=False, allow_infinity=False))
def test_parser_numbers(x):
    assert parse_value(repr(x)) == x


@given(a=st.integers(-1000, 1000), b=st.integers(1, 1000))
def test_parser_arithmetic(a, b):
    assert math.isclose(parse_value(f"{a} / {b} + 2 * ({a})"), a / b + 2 * a)
