"""Run configuration, report records and delimited output.

Emitted files are deterministic: fixed column orders, fixed iteration
orders, floats at 15 significant digits in CSV, and no timestamps.  Wall
time is printed to the console, never written to files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

__all__ = ["ConfigError", "RunConfig", "Report", "emit", "REPORT_COLUMNS"]

COMMANDS = ("rotnum", "grid", "tongue", "adjacency", "monodromy", "verify")

REPORT_COLUMNS = {
    "rotnum": ("nu", "a", "s", "rho", "locked_r", "residual", "converged"),
    "grid": ("a", "s", "rho", "locked_r"),
    "tongue": ("r", "s", "g_minus", "g_plus", "width"),
    "adjacency": ("r", "a", "s", "identity_residual", "condition_star_branch"),
    "monodromy": (
        "nu",
        "a",
        "s",
        "m11_re",
        "m11_im",
        "m12_re",
        "m12_im",
        "m21_re",
        "m21_im",
        "m22_re",
        "m22_im",
        "det_deviation",
        "projective_deviation",
    ),
    "verify": ("name", "passed", "measured", "tolerance", "claim"),
}


class ConfigError(ValueError):
    """Invalid run configuration (maps to exit code 2)."""


def _check_range(name: str, rng) -> None:
    lo, hi, step = rng
    if not all(math.isfinite(v) for v in (lo, hi, step)):
        raise ConfigError(f"{name} must be finite")
    if step <= 0.0 or hi < lo:
        raise ConfigError(f"{name} must satisfy lo <= hi with step > 0")


@dataclass(frozen=True)
class RunConfig:
    """One CLI invocation: the command plus its parameters and output plan."""

    command: str
    nu: float = 1.0
    a: Optional[float] = None
    s: Optional[float] = None
    r: Optional[int] = None
    a_range: Optional[tuple[float, float, float]] = None
    s_range: Optional[tuple[float, float, float]] = None
    tol: Optional[float] = None
    threads: Optional[int] = None
    format: str = "csv"
    output_path: Optional[str] = None
    plot: bool = True

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.nu == 0.0 or not math.isfinite(self.nu):
            raise ConfigError("nu must be finite and nonzero")
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.tol is not None and not (self.tol > 0.0):
            raise ConfigError("tol must be positive")
        need_point = {"rotnum": ("a", "s"), "monodromy": ("a", "s")}
        for name in need_point.get(self.command, ()):
            if getattr(self, name) is None:
                raise ConfigError(f"command {self.command} needs --{name}")
        if self.command == "grid":
            if self.a_range is None or self.s_range is None:
                raise ConfigError("grid needs --a-range and --s-range")
        if self.command in ("tongue", "adjacency"):
            if self.r is None or self.s_range is None:
                raise ConfigError(f"{self.command} needs --r and --s-range")
        if self.a_range is not None:
            _check_range("a-range", self.a_range)
        if self.s_range is not None:
            _check_range("s-range", self.s_range)


@dataclass
class Report:
    """Outcome of one command: records, named checks and provenance."""

    command: str
    results: list = field(default_factory=list)
    checks: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = asdict(self)
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "Report":
        payload = json.loads(text)
        return cls(
            command=payload["command"],
            results=payload["results"],
            checks=payload["checks"],
            provenance=payload["provenance"],
        )


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.15g}"
    return str(value)


def render_csv(report: Report) -> str:
    columns = REPORT_COLUMNS[report.command]
    rows = report.checks if report.command == "verify" else report.results
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(col)) for col in columns])
    return buf.getvalue()


def emit(report: Report, fmt: str, output_path: str) -> str:
    """Write the report to ``output_path`` in the requested format and return
    the path written."""
    text = render_csv(report) if fmt == "csv" else report.to_json()
    try:
        with open(output_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write report to {output_path!r}: {exc}") from exc
    return output_path
