"""Deterministic structured verification reports with canonical serialization.

Reports render to canonical JSON: sorted keys, floats at 17 significant
digits (exact round-trip), no timestamps, so identical runs produce
byte-identical files.  The environment fingerprint records versions only.
"""

from __future__ import annotations

import platform
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1


def _canon(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\t", "\\t").replace("\r", "\\r")
        return f'"{out}"'
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            return f'"{obj!r}"'
        return format(obj, ".17g")
    if isinstance(obj, Fraction):
        return _canon(str(obj))
    if isinstance(obj, (np.floating,)):
        return _canon(float(obj))
    if isinstance(obj, (np.integer,)):
        return _canon(int(obj))
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: kv[0])
        body = ",".join(f"{_canon(str(k))}:{_canon(v)}" for k, v in items)
        return "{" + body + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_canon(v) for v in obj) + "]"
    raise TypeError(f"cannot canonically serialize {type(obj).__name__}")


def canonical_dumps(obj) -> str:
    """Canonical JSON text: sorted keys, 17-significant-digit floats."""
    return _canon(obj) + "\n"


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def environment_fingerprint() -> dict:
    from . import __version__
    return {
        "python": sys.version.split()[0],
        "platform": sys.platform,
        "machine": platform.machine(),
        "numpy": np.__version__,
        "package": __version__,
        "schema": SCHEMA_VERSION,
    }


@dataclass(frozen=True)
class CheckRecord:
    """One verified inequality: measured value against its bound."""

    name: str
    measured: float
    bound: float
    passed: bool
    asserted: bool = True      # asserted checks gate the exit status
    note: str = ""

    @property
    def margin(self) -> float:
        return self.bound - self.measured

    def to_json_obj(self) -> dict:
        return {"name": self.name, "measured": float(self.measured),
                "bound": float(self.bound), "margin": float(self.margin),
                "pass": self.passed, "asserted": self.asserted,
                "note": self.note}


class VerificationReport:
    """Accumulates check records and artifacts; serializes canonically."""

    def __init__(self, config_echo: dict):
        self.config_echo = config_echo
        self.checks: list[CheckRecord] = []
        self.artifacts: dict = {}
        self.warnings: list[str] = []

    def check(self, name: str, measured: float, bound: float,
              passed: bool | None = None, asserted: bool = True,
              note: str = "") -> CheckRecord:
        if passed is None:
            passed = measured <= bound
        rec = CheckRecord(name=name, measured=float(measured),
                          bound=float(bound), passed=bool(passed),
                          asserted=asserted, note=note)
        self.checks.append(rec)
        return rec

    def warn(self, message: str) -> None:
        self.warnings.append(message)

    def attach(self, key: str, obj) -> None:
        self.artifacts[key] = obj

    @property
    def asserted_pass(self) -> bool:
        return all(c.passed for c in self.checks if c.asserted)

    @property
    def has_warnings(self) -> bool:
        return bool(self.warnings) or any(
            not c.passed for c in self.checks if not c.asserted)

    def exit_status(self) -> int:
        if not self.asserted_pass:
            return 1
        return 2 if self.has_warnings else 0

    def to_json_obj(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "config": self.config_echo,
            "environment": environment_fingerprint(),
            "checks": [c.to_json_obj() for c in self.checks],
            "warnings": list(self.warnings),
            "artifacts": self.artifacts,
            "all_asserted_pass": self.asserted_pass,
        }

    def dumps(self) -> str:
        return canonical_dumps(self.to_json_obj())
