"""Command-line entry point: one subcommand per task, plus verify and emit.

Exit codes: 0 success, 2 usage, 3 precondition, 4 numeric failure,
5 an embedded check failed.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .errors import PlapError, UsageError
from .io import dumps
from .scenario import BUILTIN, DEFAULT_FOR_TASK, TASKS, apply_overrides, load_scenario, run

DEFAULT_OUT = "plapfuchs-out"


def _tol_pair(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected name=value, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tolerance {name!r}: {value!r} is not a number") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="plapfuchs", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help=f"output directory (default {DEFAULT_OUT}/<scenario>)")
    common.add_argument("--tol", action="append", type=_tol_pair, default=[], metavar="NAME=VALUE",
                        help="override a named tolerance (repeatable)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="table format")
    for task in TASKS:
        sp = sub.add_parser(task, parents=[common], help=f"run a {task} scenario")
        sp.add_argument("--scenario", action="append", default=[], metavar="FILE",
                        help=f"YAML file or built-in name (default {DEFAULT_FOR_TASK[task]}); "
                             "repeat to run a batch concurrently")
        sp.add_argument("--grid", type=int, help="override the main grid size")
        sp.add_argument("--seed", type=int, help="seed for randomized cutoffs")
        sp.add_argument("--jobs", type=int, default=None, help="worker processes for a batch")
    vp = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    vp.add_argument("--criteria", type=int, nargs="+", help="subset of criteria (default all)")
    ep = sub.add_parser("emit", help="write plot data for a finished run directory")
    ep.add_argument("--scenario", required=True, metavar="RUN_DIR", help="directory holding record.json")
    ep.add_argument("--out", help="destination (default RUN_DIR/plot)")
    sub.add_parser("list", help="list built-in scenarios")
    return ap


def _run_one(task: str, ref: str, out: str | None, fmt: str, grid, seed, tol: dict) -> dict:
    sc = load_scenario(ref)
    if sc.task != task:
        raise UsageError(f"scenario {ref!r} is a {sc.task!r} scenario, not {task!r}")
    sc = apply_overrides(sc, grid, seed, tol)
    rec = run(sc, out or str(Path(DEFAULT_OUT) / sc.name), fmt)
    return rec.to_dict()


def _run_worker(args) -> tuple[str, dict | None, str | None, int]:
    task, ref, out, fmt, grid, seed, tol = args
    try:
        return ref, _run_one(task, ref, out, fmt, grid, seed, tol), None, 0
    except PlapError as exc:
        return ref, None, f"{type(exc).__name__}: {exc}", exc.exit_code


def _cmd_task(ns) -> int:
    tol = dict(ns.tol)
    refs = ns.scenario or [DEFAULT_FOR_TASK[ns.command]]
    if len(refs) == 1:
        rec = _run_one(ns.command, refs[0], ns.out, ns.format, ns.grid, ns.seed, tol)
        sys.stdout.write(dumps(rec))
        return 0 if rec["passed"] else 5
    # batch: isolated output directories, one per scenario
    base = Path(ns.out or DEFAULT_OUT)
    names = [Path(r).stem if Path(r).exists() else r for r in refs]
    if len(set(names)) != len(names):
        raise UsageError("batch scenarios must have distinct names")
    jobs = [(ns.command, r, str(base / n), ns.format, ns.grid, ns.seed, tol) for r, n in zip(refs, names)]
    with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
        results = list(pool.map(_run_worker, jobs))
    code = 0
    for ref, rec, err, status in results:
        if err is not None:
            print(f"{ref}: {err}", file=sys.stderr)
            code = max(code, status)
        else:
            print(f"{ref}: {'PASS' if rec['passed'] else 'FAIL'}")
            if not rec["passed"]:
                code = max(code, 5)
    return code


def _cmd_verify(ns) -> int:
    from .acceptance import verify_suite

    summary = verify_suite(ns.out, dict(ns.tol), ns.criteria)
    return 0 if summary.passed else 5


def _cmd_emit(ns) -> int:
    from .plotdata import emit_from_run

    out = ns.out or str(Path(ns.scenario) / "plot")
    sys.stdout.write(dumps(emit_from_run(ns.scenario, out)))
    return 0


def _cmd_list(ns) -> int:
    for name in sorted(BUILTIN):
        print(f"{name:<28} {BUILTIN[name]['task']}")
    return 0


def main(argv=None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        if ns.command == "verify":
            return _cmd_verify(ns)
        if ns.command == "emit":
            return _cmd_emit(ns)
        if ns.command == "list":
            return _cmd_list(ns)
        return _cmd_task(ns)
    except PlapError as exc:
        print(f"plapfuchs: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
