from __future__ import annotations

import csv
import io

import pytest
from _shared import scenario

from conjlab.suites import QUANTITIES, SUITES, emit_plotdata, run_suite, tol_scale


@pytest.mark.parametrize("name", ["zero_f", "s4_constant"])
def test_full_suite_passes(name):
    r = run_suite(scenario(name), "all")
    assert r.passed, [e.check_id for e in r.failures]
    assert r.environment["seed"] == 0x5EED
    ids = {e.check_id for e in r.entries}
    assert {"certificate.kgamma_over_alpha", "lyapunov.V_decrease", "conjugacy.path_equivalence_H"} <= ids


def test_jiang_stability_reports_no_equilibrium():
    r = run_suite(scenario("jiang"), "stability")
    e = r.get("stability.equilibrium_not_found")
    assert e.informational and r.passed


def test_suite_names_and_rejection():
    assert SUITES[-1] == "all"
    with pytest.raises(ValueError):
        run_suite(scenario("zero_f"), "nonsense")


def test_seed_changes_sampling_but_not_outcome():
    a = run_suite(scenario("s4_constant"), "continuity", seed=1)
    b = run_suite(scenario("s4_constant"), "continuity", seed=2)
    assert a.passed and b.passed
    assert a.to_json() != b.to_json()


def test_tol_scale(monkeypatch):
    monkeypatch.delenv("CONJLAB_TOL_SCALE", raising=False)
    assert tol_scale() == 1.0
    monkeypatch.setenv("CONJLAB_TOL_SCALE", "10")
    assert tol_scale() == 10.0
    assert run_suite(scenario("zero_f"), "conjugacy").environment["tol_scale"] == 10.0
    monkeypatch.setenv("CONJLAB_TOL_SCALE", "-1")
    with pytest.raises(ValueError):
        tol_scale()


@pytest.mark.parametrize("quantity", QUANTITIES)
def test_plotdata(quantity):
    text = emit_plotdata(scenario("jiang"), quantity, 0.0, 4.0, 5)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["t", "quantity", "value", "scenario"]
    assert len(rows) >= 6
    assert all(r[3] == "jiang" for r in rows[1:])
    assert emit_plotdata(scenario("jiang"), quantity, 0.0, 4.0, 0).strip() == "t,quantity,value,scenario"
