"""Certificate reports: entries, human table, JSON and CSV emission."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ReportEntry:
    check_id: str
    anchor: str
    measured: float
    bound: float
    passed: bool
    note: str = ""
    informational: bool = False

    def as_dict(self) -> dict:
        return {
            "check_id": self.check_id,
            "paper_anchor": self.anchor,
            "measured": _num(self.measured),
            "bound": _num(self.bound),
            "pass": bool(self.passed),
            "informational": bool(self.informational),
            "note": self.note,
        }


def _num(x):
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def check_le(check_id: str, anchor: str, measured: float, bound: float, note: str = "") -> ReportEntry:
    """Entry that passes iff ``measured <= bound`` (NaN never passes)."""
    measured = float(measured)
    bound = float(bound)
    return ReportEntry(check_id, anchor, measured, bound, bool(measured <= bound), note)


def check_flag(check_id: str, anchor: str, ok: bool, note: str = "") -> ReportEntry:
    """Boolean check encoded as measured 0 (holds) / 1 (fails) against bound 0."""
    return ReportEntry(check_id, anchor, 0.0 if ok else 1.0, 0.0, bool(ok), note)


def info(check_id: str, anchor: str, measured: float, note: str = "") -> ReportEntry:
    return ReportEntry(check_id, anchor, float(measured), math.inf, True, note, informational=True)


@dataclass
class CertificateReport:
    scenario: str
    entries: list[ReportEntry] = field(default_factory=list)
    environment: dict = field(default_factory=dict)
    format_version: int = FORMAT_VERSION

    def add(self, *entries: ReportEntry) -> None:
        self.entries.extend(entries)

    def extend(self, entries) -> None:
        self.entries.extend(entries)

    @property
    def ordered(self) -> list[ReportEntry]:
        return sorted(self.entries, key=lambda e: e.check_id)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    @property
    def failures(self) -> list[ReportEntry]:
        return [e for e in self.ordered if not e.passed]

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def get(self, check_id: str) -> ReportEntry:
        for e in self.entries:
            if e.check_id == check_id:
                return e
        raise KeyError(check_id)

    def to_dict(self) -> dict:
        return {
            "format_version": self.format_version,
            "scenario": self.scenario,
            "environment": self.environment,
            "entries": [e.as_dict() for e in self.ordered],
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["scenario", "check_id", "paper_anchor", "measured", "bound", "pass", "note"])
        for e in self.ordered:
            w.writerow([self.scenario, e.check_id, e.anchor, repr(float(e.measured)),
                        repr(float(e.bound)), "PASS" if e.passed else "FAIL", e.note])
        return buf.getvalue()

    def table(self) -> str:
        rows = [("check", "anchor", "measured", "bound", "status")]
        for e in self.ordered:
            status = "info" if e.informational else ("PASS" if e.passed else "FAIL")
            bound = "-" if math.isinf(e.bound) else f"{e.bound:.4g}"
            rows.append((e.check_id, e.anchor, f"{e.measured:.4g}", bound, status))
        widths = [max(len(r[i]) for r in rows) for i in range(5)]
        lines = [f"scenario: {self.scenario}"]
        for i, r in enumerate(rows):
            lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
            if i == 0:
                lines.append("  ".join("-" * w for w in widths))
        n_fail = len(self.failures)
        lines.append(f"{len(self.entries)} checks, {n_fail} failed")
        return "\n".join(lines)
