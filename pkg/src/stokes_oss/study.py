"""Mesh-refinement studies of a single eigenvalue against a reference value."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .mesh import DomainTag, build_mesh
from .three_field import ThreeFieldParams, assemble_three_field
from .two_field import TwoFieldParams, assemble_two_field

FORMULATIONS = ("two_field", "three_field")
CSV_HEADER = ("size", "h_max", "lambda_h", "rel_error")


class StudyError(RuntimeError):
    """A solve failed part-way; ``report`` holds the rows computed so far."""

    def __init__(self, message: str, report: "StudyReport"):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class StudyConfig:
    """One refinement sequence.

    ``sizes`` are divisions per side (square, L-shape) or target vertex
    counts (cracked square). ``eigen_index`` is 1-based and counts
    multiplicity; ``k`` defaults to it.
    """

    domain: str
    formulation: str
    order: int
    sizes: tuple
    reference: float
    eigen_index: int = 1
    k: int | None = None
    params: dict = field(default_factory=dict)
    name: str | None = None

    def __post_init__(self):
        DomainTag(self.domain)
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"formulation must be one of {FORMULATIONS}, got {self.formulation!r}")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order!r}")
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes:
            raise ValueError("at least one mesh size is required")
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ValueError("mesh sizes must be strictly increasing")
        object.__setattr__(self, "sizes", sizes)
        if not self.reference > 0:
            raise ValueError("reference value must be positive")
        if self.eigen_index < 1:
            raise ValueError("eigen_index is 1-based")
        k = self.eigen_index if self.k is None else int(self.k)
        if k < self.eigen_index:
            raise ValueError("k must be at least eigen_index")
        object.__setattr__(self, "k", k)
        self.make_params()  # validate early

    def make_params(self):
        cls = TwoFieldParams if self.formulation == "two_field" else ThreeFieldParams
        return cls(**self.params)

    @property
    def basename(self) -> str:
        return f"{self.domain}_{self.formulation}_P{self.order}"

    @classmethod
    def from_dict(cls, data: dict) -> "StudyConfig":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def load_config(path) -> StudyConfig:
    """Read a JSON study config; unknown keys (expected rows, notes) are ignored."""
    with open(path, encoding="utf-8") as fh:
        return StudyConfig.from_dict(json.load(fh))


@dataclass(frozen=True)
class StudyRow:
    size: int
    h_max: float
    lambda_h: float
    rel_error: float


@dataclass(frozen=True)
class StudyReport:
    config: StudyConfig
    rows: tuple
    slope: float | None
    monotone: bool


def fit_slope(points) -> float:
    """Least-squares slope of ``log(error)`` against ``log(1 / size)``.

    Examples
    --------
    >>> round(fit_slope([(10, 1e-2), (20, 2.5e-3)]), 12)
    2.0
    """
    pts = [(float(s), float(e)) for s, e in points]
    if len(pts) < 2:
        raise ValueError("at least two points are needed to fit a slope")
    if any(s <= 0 for s, _ in pts):
        raise ValueError("sizes must be positive")
    if any(not e > 0 for _, e in pts):
        raise ValueError("errors must be positive")
    x = -np.log([s for s, _ in pts])
    if np.ptp(x) == 0:
        raise ValueError("sizes must not all be equal")
    y = np.log([e for _, e in pts])
    return float(np.polyfit(x, y, 1)[0])


def effective_size(domain: str, size: float) -> float:
    # vertex counts behave like h^-2 in two dimensions
    return math.sqrt(size) if DomainTag(domain) is DomainTag.CRACKED else float(size)


def report_slope(config: StudyConfig, rows) -> float | None:
    """Slope over the finest half of the rows, or ``None`` if undefined."""
    tail = [r for r in rows[len(rows) // 2:] if r.rel_error > 0]
    if len(tail) < 2:
        return None
    return fit_slope([(effective_size(config.domain, r.size), r.rel_error) for r in tail])


def is_monotone(rows) -> bool:
    errs = [r.rel_error for r in rows]
    return (all(r.rel_error >= 0 for r in rows)
            and all(b < a for a, b in zip(errs, errs[1:])))


def make_report(config: StudyConfig, rows) -> StudyReport:
    rows = tuple(rows)
    return StudyReport(config, rows, report_slope(config, rows), is_monotone(rows))


def solve_row(config: StudyConfig, size: int) -> StudyRow:
    mesh = build_mesh(config.domain, size)
    assemble = assemble_two_field if config.formulation == "two_field" else assemble_three_field
    system = assemble(mesh, config.order, config.make_params())
    lam = float(system.eigensolve(config.k).eigenvalues[config.eigen_index - 1])
    recorded = mesh.n_vertices if DomainTag(config.domain) is DomainTag.CRACKED else size
    return StudyRow(recorded, mesh.h_max, lam, (lam - config.reference) / config.reference)


def run_convergence_study(config: StudyConfig, progress=None) -> StudyReport:
    """Solve every mesh size in order and summarize the errors.

    Raises :class:`StudyError` carrying the partial report when a solve fails.
    """
    rows = []
    for size in config.sizes:
        try:
            row = solve_row(config, size)
        except Exception as exc:
            raise StudyError(f"size {size}: {exc}", make_report(config, rows)) from exc
        rows.append(row)
        if progress is not None:
            progress(row)
    return make_report(config, rows)


def _fmt(x) -> str:
    return repr(int(x)) if isinstance(x, (int, np.integer)) else repr(float(x))


def emit_report(report: StudyReport, fmt: str = "csv") -> str:
    """Render a report as ``"csv"`` or ``"markdown"`` text."""
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in report.rows:
            writer.writerow([_fmt(r.size), _fmt(r.h_max), _fmt(r.lambda_h), _fmt(r.rel_error)])
        return buf.getvalue()
    if fmt == "markdown":
        cfg = report.config
        size_label = "M" if DomainTag(cfg.domain) is DomainTag.CRACKED else "N"
        lines = [f"### {cfg.basename} (eigenvalue {cfg.eigen_index}, reference {_fmt(cfg.reference)})",
                 "",
                 f"| {size_label} | lambda_h | rel. error |",
                 "|---:|---:|---:|"]
        for r in report.rows:
            lines.append(f"| {_fmt(r.size)} | {_fmt(r.lambda_h)} | {_fmt(r.rel_error)} |")
        lines.append("")
        slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
        lines.append(f"fitted slope: {slope}; monotone from above: {'yes' if report.monotone else 'no'}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {fmt!r}")


def write_report(report: StudyReport, out_dir) -> tuple:
    """Write ``<basename>.csv`` and ``<basename>.md``; returns the two paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{report.config.basename}.csv"
    md_path = out / f"{report.config.basename}.md"
    csv_path.write_text(emit_report(report, "csv"), encoding="utf-8")
    md_path.write_text(emit_report(report, "markdown"), encoding="utf-8")
    return csv_path, md_path


def config_to_dict(config: StudyConfig) -> dict:
    d = asdict(config)
    d["sizes"] = list(config.sizes)
    return d
