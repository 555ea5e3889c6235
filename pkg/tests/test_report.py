from __future__ import annotations

import csv
import io
import json
import math

from conjlab.report import CertificateReport, check_flag, check_le, info


def _report() -> CertificateReport:
    r = CertificateReport("demo", environment={"seed": 1})
    r.add(check_le("b.check", "anchor-b", 0.5, 1.0), check_le("a.check", "anchor-a", 2.0, 1.0))
    r.add(info("c.info", "anchor-c", 3.0), check_flag("d.flag", "anchor-d", True))
    return r


def test_pass_logic():
    r = _report()
    assert not r.passed and r.exit_code == 1
    assert [e.check_id for e in r.failures] == ["a.check"]
    assert not check_le("x", "", math.nan, 1.0).passed
    assert check_le("x", "", 1.0, 1.0).passed


def test_informational_entries_never_fail():
    r = CertificateReport("demo")
    r.add(info("only.info", "x", math.inf))
    assert r.passed and r.exit_code == 0


def test_json_roundtrip():
    d = json.loads(_report().to_json())
    assert d["scenario"] == "demo" and d["passed"] is False
    ids = [e["check_id"] for e in d["entries"]]
    assert ids == sorted(ids)
    c = next(e for e in d["entries"] if e["check_id"] == "c.info")
    assert c["bound"] == "inf" and c["informational"] is True


def test_nonfinite_json_is_valid():
    r = CertificateReport("demo")
    r.add(check_le("x", "", math.nan, 1.0))
    text = r.to_json()
    assert "NaN" not in text
    assert json.loads(text)["entries"][0]["measured"] == "nan"


def test_csv_layout():
    rows = list(csv.reader(io.StringIO(_report().to_csv())))
    assert rows[0][:3] == ["scenario", "check_id", "paper_anchor"]
    assert len(rows) == 5
    assert {r[5] for r in rows[1:]} == {"PASS", "FAIL"}


def test_table_mentions_failures():
    t = _report().table()
    assert "4 checks, 1 failed" in t and "info" in t
