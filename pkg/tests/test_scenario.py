from __future__ import annotations

import math

import numpy as np
import pytest

from conjlab.errors import CertificateRejected, ParseError
from conjlab.scenario import load_file, load_scenario, parse_value, shipped_names

BASE = """\
name = demo
[linear]
A = constant(-1)
[perturbation]
f = scaled_sin(0.2)
[constants]
K = 1
alpha = 1
M = 1
gamma = 0.2
mu = 0.2
"""


def test_minimal_document():
    sc = load_scenario(BASE)
    assert sc.name == "demo" and sc.dim == 1
    assert sc.r == 1 and sc.differentiable
    assert sc.probes.states.ndim == 2 and sc.probes.states.shape[1] == 1


def test_shipped_scenarios_load():
    names = shipped_names()
    assert {"jiang", "zero_f", "s3_rot", "s4_constant", "scaled_sin", "periodic"} <= set(names)
    for n in names:
        assert load_file(n).name == n


def test_jiang_constants(jiang):
    sc = load_file("jiang")
    assert (sc.K, sc.alpha, sc.M, sc.gamma) == (1.0, 1.0, 1.0, 0.2)
    assert sc.mu == pytest.approx(math.pi / 5)
    assert sc.probes.jacobian_box == (0.4, 2.0)


@pytest.mark.parametrize("text,expected", [
    ("pi / 5", math.pi / 5),
    ("sqrt(2) * 3", 3 * math.sqrt(2)),
    ("-1e-3", -1e-3),
    ("[1, 2.5]", [1.0, 2.5]),
    ("exp(1) - e", 0.0),
])
def test_value_expressions(text, expected):
    assert parse_value(text) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["__import__('os')", "1 +", "x", "open('f')", "2 ** 'a'"])
def test_value_rejects(bad):
    with pytest.raises(ParseError):
        parse_value(bad)


def _locate(text: str) -> ParseError:
    with pytest.raises(ParseError) as info:
        load_scenario(text)
    return info.value


def test_errors_carry_position():
    e = _locate(BASE.replace("gamma = 0.2", "gamma = 0.2 +"))
    assert e.line == 10 and e.column >= 1
    e = _locate(BASE + "[bogus]\n")
    assert e.line == 12
    e = _locate(BASE.replace("M = 1", "Mx = 1"))
    assert e.line == 9 and "Mx" in str(e)


def test_structural_errors():
    _locate(BASE.replace("mu = 0.2\n", ""))
    _locate(BASE + "mu = 0.3\n")
    _locate(BASE.replace("constant(-1)", "spiral(-1)"))
    _locate(BASE.replace("scaled_sin(0.2)", "scaled_sin()"))


def test_comments_and_quotes():
    text = BASE.replace("name = demo", 'name = demo\ndescription = "has # inside"  # trailing')
    assert load_scenario(text).description == "has # inside"


def test_certificate_rejected():
    with pytest.raises(CertificateRejected) as info:
        load_scenario(BASE.replace("gamma = 0.2", "gamma = 2"))
    assert "gamma" in str(info.value) or "K" in str(info.value)


def test_probe_states_deterministic():
    a = load_scenario(BASE + "[probes]\nn_states = 4\nprobe_seed = 7\n")
    b = load_scenario(BASE + "[probes]\nn_states = 4\nprobe_seed = 7\n")
    np.testing.assert_array_equal(a.probes.states, b.probes.states)
    assert a.probes.states.shape == (4, 1)


def test_tolerances_section():
    sc = load_scenario(BASE + "[tolerances]\nrtol = 1e-11\natol = 1e-14\n")
    assert sc.cfg.rtol == 1e-11 and sc.cfg.atol == 1e-14
