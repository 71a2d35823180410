"""Plot-ready CSV tables (log r precomputed) with a JSON manifest.

Nothing here draws; the manifest names the axes and states what the
picture is meant to show.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .errors import UsageError
from .io import from_json_value, read_csv, write_csv, write_json
from .polar2d import HarnackReport
from .radial import AsymptoticsReport, QuotientProfile, RadialSolution


def fitted_curve(report: AsymptoticsReport, r) -> tuple[np.ndarray, np.ndarray]:
    """(full fit, leading term) of an asymptotics report evaluated at r."""
    r = np.asarray(r, dtype=float)
    c0 = report.coefficients.get("constant", 0.0)
    if report.klass == "bounded-limit":
        lead = np.full_like(r, report.constant)
        return lead, lead
    if report.klass == "log":
        lead = report.constant * np.log(r)
        return c0 + lead, lead
    if report.klass == "power":
        lead = report.constant * r**report.exponent
        return c0 + lead, lead
    raise UsageError(f"no fitted curve for class {report.klass!r}")


def _manifest(out: Path, kind: str, table: str, x: str, y: list[str], claim: str, extra=None) -> dict:
    doc = {"kind": kind, "table": table, "x": {"column": x, "scale": "linear", "label": "log r"},
           "y": [{"column": c} for c in y], "claim": claim}
    if extra:
        doc.update(extra)
    write_json(out / "manifest.json", doc)
    return doc


def _quotient_plot(out: Path, radii, ratio, zeta) -> dict:
    write_csv(out / "quotient.csv", ["log_r", "u_over_v"], zip(np.log(radii), ratio))
    return _manifest(out, "quotient", "quotient.csv", "log_r", ["u_over_v"],
                     "the quotient u/v of two positive solutions settles to a limit as r approaches zeta",
                     {"zeta": zeta})


def _harnack_plot(out: Path, radii, m, M, zeta) -> dict:
    m, M = np.asarray(m, dtype=float), np.asarray(M, dtype=float)
    write_csv(out / "harnack.csv", ["log_r", "m_r", "M_r", "ratio"], zip(np.log(radii), m, M, M / m))
    return _manifest(out, "harnack", "harnack.csv", "log_r", ["m_r", "M_r", "ratio"],
                     "sphere-wise min and max of u/v are eventually monotone and their ratio stays bounded, "
                     "shrinking toward 1 as r approaches zeta", {"zeta": zeta})


def _overlay_plot(out: Path, r, v, report: AsymptoticsReport) -> dict:
    r, v = np.asarray(r, dtype=float), np.asarray(v, dtype=float)
    full, lead = fitted_curve(report, r)
    lo, hi = report.window
    inside = (r >= lo * (1 - 1e-12)) & (r <= hi * (1 + 1e-12))
    write_csv(out / "asymptotics.csv", ["log_r", "solution", "fit", "leading_term", "in_window"],
              zip(np.log(r), v, full, lead, inside.astype(int)))
    return _manifest(out, "asymptotics", "asymptotics.csv", "log_r", ["solution", "fit", "leading_term"],
                     f"near zeta the solution behaves like its {report.klass} leading term",
                     {"zeta": report.zeta, "class": report.klass, "exponent": report.exponent,
                      "window": list(report.window)})


def emit_plotdata(obj, out, solution: RadialSolution | None = None) -> dict:
    """Write plot tables for a QuotientProfile, a HarnackReport or an AsymptoticsReport (with its solution)."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, QuotientProfile):
        return _quotient_plot(out, obj.radii, obj.m, obj.zeta)
    if isinstance(obj, HarnackReport):
        return _harnack_plot(out, obj.radii, obj.m, obj.M, obj.zeta)
    if isinstance(obj, AsymptoticsReport):
        if solution is None:
            raise UsageError("an asymptotics overlay needs the solution it was fitted to")
        return _overlay_plot(out, solution.grid, solution.v, obj)
    raise UsageError(f"cannot emit plot data for {type(obj).__name__}")


def _columns(path: Path) -> dict:
    header, rows = read_csv(path)
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {h: data[:, i] for i, h in enumerate(header)}


def _zeta_of(value) -> float:
    return math.inf if value in ("inf", "infinity", "oo", math.inf) else float(value or 0.0)


def emit_from_run(run_dir, out) -> dict:
    """Plot data for the artifacts of a finished run directory."""
    run_dir, out = Path(run_dir), Path(out)
    rec_path = run_dir / "record.json"
    if not rec_path.exists():
        raise UsageError(f"{run_dir} holds no record.json")
    record = json.loads(rec_path.read_text())
    task = record["config"]["task"]
    zeta = _zeta_of((record["config"].get("settings") or {}).get("zeta", 0))
    if task in ("harnack", "probe"):
        table = run_dir / ("harnack_full.csv" if task == "harnack" else "probe.csv")
        if not table.exists():
            raise UsageError(f"{table.name} missing; emit reads CSV artifacts")
        c = _columns(table)
        order = np.argsort(c["r"])
        return _harnack_plot(out, c["r"][order], c["m"][order], c["M"][order], zeta)
    if task == "classify":
        sol, doc = run_dir / "solution.csv", run_dir / "asymptotics.json"
        if not sol.exists():
            raise UsageError("solution.csv missing; emit reads CSV artifacts")
        raw = {k: from_json_value(v) for k, v in json.loads(doc.read_text()).items()}
        rep = AsymptoticsReport(float(raw["zeta"]), raw["class"], float(raw["exponent"]), float(raw["constant"]),
                                float(raw["residual"]), tuple(raw["window"]), raw["coefficients"])
        c = _columns(sol)
        return _overlay_plot(out, c["r"], c["v"], rep)
    raise UsageError(f"no plot data for task {task!r} (supported: classify, harnack, probe)")
