"""Structured verification reports and their JSON/text serialization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Tuple

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one checklist entry.

    ``status`` is derived from the residual: "pass" exactly when the
    residual is finite and at most the tolerance.  Composite checks report
    a dimensionless worst ratio against tolerance 1.0 and list the raw
    parts in ``note``.
    """

    id: str
    description: str
    claim: str
    status: str
    residual: float
    tolerance: float
    note: str = ""

    def __post_init__(self):
        expected = "pass" if (math.isfinite(self.residual)
                              and self.residual <= self.tolerance) else "fail"
        if self.status != expected:
            raise ValueError(f"check {self.id}: status {self.status!r} contradicts "
                             f"residual {self.residual} vs tolerance {self.tolerance}")

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def check_result(id: str, description: str, claim: str, residual: float,
                 tolerance: float, note: str = "") -> CheckResult:
    residual = float(residual)
    status = "pass" if (math.isfinite(residual) and residual <= tolerance) else "fail"
    return CheckResult(id=id, description=description, claim=claim, status=status,
                       residual=residual, tolerance=float(tolerance), note=note)


@dataclass(frozen=True)
class VerificationReport:
    """Full checklist outcome plus the configuration that produced it."""

    config_echo: dict
    checks: Tuple[CheckResult, ...]
    traces_emitted: Tuple[str, ...] = ()
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        ids = [c.id for c in self.checks]
        if len(ids) != len(set(ids)):
            raise ValueError(f"duplicate check ids in report: {ids}")

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _json_float(x: float):
    # JSON has no inf/nan literal; keep failed residuals readable.
    return x if math.isfinite(x) else repr(x)


def emit_report(report: VerificationReport, format: str = "text") -> bytes:
    """Serialize a report; JSON output has stable key order byte for byte."""
    if format == "json":
        doc = {
            "schema_version": report.schema_version,
            "config": report.config_echo,
            "checks": [
                {
                    "id": c.id,
                    "description": c.description,
                    "claim": c.claim,
                    "status": c.status,
                    "residual": _json_float(c.residual),
                    "tolerance": c.tolerance,
                    "note": c.note,
                }
                for c in report.checks
            ],
            "traces_emitted": list(report.traces_emitted),
            "all_passed": report.all_passed,
        }
        return (json.dumps(doc, indent=2) + "\n").encode()
    if format == "text":
        lines = [f"verification report (schema {report.schema_version})"]
        cfg = report.config_echo
        if cfg:
            lines.append("config: " + ", ".join(f"{k}={v}" for k, v in cfg.items()))
        for c in report.checks:
            lines.append(f"{c.id:<4} {'PASS' if c.passed else 'FAIL'}  "
                         f"residual={c.residual:.3e}  tol={c.tolerance:.3e}  "
                         f"{c.description}")
        npass = sum(c.passed for c in report.checks)
        lines.append(f"{npass}/{len(report.checks)} checks passed")
        if report.traces_emitted:
            lines.append("traces: " + ", ".join(report.traces_emitted))
        return ("\n".join(lines) + "\n").encode()
    raise ValueError(f"unknown report format {format!r}")
