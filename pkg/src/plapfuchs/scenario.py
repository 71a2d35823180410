"""Scenario files, the built-in scenario library, and the task runner.

A scenario is a YAML mapping::

    name: hardy-exponents
    task: exponents            # one of TASKS
    params: {p: 2.5, d: 3}
    potential: {hardy_fraction: 0.5}
    settings: {...}            # task-specific, see the task functions
    tolerances: {exponent_residual: 1.0e-10}

Potentials are written as a mapping with any of ``hardy`` (coefficient),
``hardy_fraction`` (multiple of the Hardy constant), ``shells`` (list of
``[r_lo, r_hi, amplitude, power]``), ``sampled`` (``{r: [...], v: [...]}``),
``angular`` (expression in ``theta``), ``builtin: example-shells`` or
``file: <path>`` pointing at the potential text format of :mod:`plapfuchs.io`.
"""

from __future__ import annotations

import copy
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
import yaml

from . import __version__
from .errors import CheckFailure, PreconditionError, ScenarioParseError, UsageError
from .exponents import (Params, angular_residual, characteristic, fundamental_solution, hardy_constant,
                        sector_exponents, solve_gamma)
from .expressions import compile_expression
from .io import potential_from_text, write_csv, write_json
from .numerics import log_grid
from .potentials import (DilationSequence, Potential, Shell, hardy, lq_criterion, shell_example, shell_sequence,
                         weak_fuchsian_check)
from . import polar2d, radial, variational

DEFAULT_TOLERANCES = {
    "exponent_residual": 1e-10,
    "radial_power_error": 1e-6,
    "exhaustion_exponent": 1e-3,
    "classify_exponent": 1e-4,
    "kelvin_residual": 1e-6,
    "kelvin_involution": 1e-12,
    "capacity_gap": 1e-4,
    "flux_spread": 1e-7,
    "residual_2d": 1e-9,
    "harnack_final_ratio": 1.02,
    "sector_gap": 1e-3,
    "angular_residual": 1e-8,
    "picone_decay": 10.0,
    "picone_floor": 1e-12,
}


@dataclass
class Scenario:
    name: str
    task: str
    params: dict | None = None
    potential: dict | None = None
    settings: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "task": self.task, "params": self.params, "potential": self.potential,
                "settings": self.settings, "tolerances": self.tolerances}


@dataclass
class TaskResult:
    summary: dict
    checks: dict
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    documents: dict = field(default_factory=dict)  # name -> JSON-able mapping


@dataclass
class RunRecord:
    scenario: str
    version: str
    config: dict
    wall_time: float
    summary: dict
    checks: dict
    artifacts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(bool(v) for v in self.checks.values())

    def to_dict(self, with_time: bool = False) -> dict:
        out = {"scenario": self.scenario, "version": self.version, "config": self.config,
               "summary": self.summary, "checks": self.checks, "passed": self.passed,
               "artifacts": self.artifacts}
        if with_time:
            out["wall_time"] = self.wall_time
        return out


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        col = mark.column + 1 if mark is not None else None
        problem = getattr(exc, "problem", None) or str(exc)
        raise ScenarioParseError(f"{source}: {problem}", line, col) from None
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{source}: scenario must be a mapping", 1, 1)
    unknown = set(data) - {"name", "task", "params", "potential", "settings", "tolerances"}
    if unknown:
        raise ScenarioParseError(f"{source}: unknown keys {sorted(unknown)}")
    if "task" not in data:
        raise ScenarioParseError(f"{source}: missing 'task'")
    if data["task"] not in TASKS:
        raise ScenarioParseError(f"{source}: unknown task {data['task']!r}")
    for key in ("settings", "tolerances"):
        if data.get(key) is not None and not isinstance(data[key], dict):
            raise ScenarioParseError(f"{source}: '{key}' must be a mapping")
    return Scenario(str(data.get("name", data["task"])), data["task"], data.get("params"), data.get("potential"),
                    dict(data.get("settings") or {}), dict(data.get("tolerances") or {}))


def load_scenario(ref: str) -> Scenario:
    """A path to a YAML file, or the name of a built-in scenario."""
    if ref in BUILTIN:
        return builtin(ref)
    path = Path(ref)
    if not path.exists():
        raise UsageError(f"no scenario file or built-in named {ref!r}")
    return parse_scenario(path.read_text(), str(path))


def dump_scenario(sc: Scenario) -> str:
    return yaml.safe_dump(sc.to_dict(), sort_keys=True)


def make_params(spec) -> Params:
    if spec is None:
        raise PreconditionError("scenario needs params {p, d}")
    try:
        return Params(float(spec["p"]), int(spec["d"]))
    except (KeyError, TypeError) as exc:
        raise ScenarioParseError(f"params must provide p and d ({exc})") from None


def make_potential(spec, params: Params) -> Potential:
    if spec is None:
        return Potential()
    if not isinstance(spec, dict):
        raise ScenarioParseError("potential must be a mapping")
    if "file" in spec:
        path = Path(spec["file"])
        if not path.exists():
            raise PreconditionError(f"potential file {path} not found")
        V = potential_from_text(path.read_text(), str(path))
    elif spec.get("builtin") == "example-shells":
        V = shell_example(params.p, int(spec.get("n_shells", 8)))
    elif spec.get("builtin") is not None:
        raise ScenarioParseError(f"unknown built-in potential {spec['builtin']!r}")
    else:
        V = Potential()
    lam = float(spec.get("hardy", 0.0))
    if "hardy_fraction" in spec:
        lam += float(spec["hardy_fraction"]) * hardy_constant(params)
    shells = list(V.shells)
    for item in spec.get("shells", []) or []:
        if isinstance(item, dict):
            item = [item["r_lo"], item["r_hi"], item["amplitude"], item["power"]]
        shells.append(Shell(*(float(x) for x in item)))
    sr = sv = None
    if spec.get("sampled"):
        sr = tuple(float(x) for x in spec["sampled"]["r"])
        sv = tuple(float(x) for x in spec["sampled"]["v"])
    return Potential(hardy_coeff=lam, shells=tuple(shells), sampled_r=sr, sampled_v=sv, angular=spec.get("angular"))


def _zeta(x) -> float:
    if x in (0, 0.0, "0"):
        return 0.0
    if x in ("inf", "infinity", math.inf, "oo"):
        return math.inf
    raise ScenarioParseError(f"zeta must be 0 or inf, got {x!r}")


def _tol(sc: Scenario, name: str) -> float:
    return float(sc.tolerances.get(name, DEFAULT_TOLERANCES[name]))


def _expected_gamma(V: Potential, params: Params, zeta: float):
    """gamma_-/gamma_+ when V is a pure Hardy term (or zero)."""
    if V.shells or V.sampled_r is not None:
        return None
    pair = solve_gamma(V.hardy_coeff, params)
    return pair.gamma_minus if zeta == 0.0 else pair.gamma_plus


# ---------------------------------------------------------------------------
# tasks
# ---------------------------------------------------------------------------


def task_exponents(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    cH = hardy_constant(params)
    st = sc.settings
    if "lambdas" in st:
        lams = [float(x) for x in st["lambdas"]]
    else:
        n = int(st.get("n_lambda", 11))
        lo = float(st.get("lambda_min", cH - 1.0))
        lams = list(np.linspace(lo, cH, n))
    tol = _tol(sc, "exponent_residual")
    rows, ok_res, ok_order = [], True, True
    degenerate_at_cH = None
    for lam in lams:
        pair = solve_gamma(lam, params)
        r1 = float(characteristic(pair.gamma_minus, params)) - lam
        r2 = float(characteristic(pair.gamma_plus, params)) - lam
        rows.append((lam, pair.gamma_minus, pair.gamma_plus, pair.degenerate, r1, r2))
        if not pair.degenerate:
            ok_res &= max(abs(r1), abs(r2)) <= tol * max(1.0, abs(lam))
        g = params.gamma_star
        ok_order &= pair.gamma_minus <= g + 1e-12 and g <= pair.gamma_plus + 1e-12
        if lam == cH:
            degenerate_at_cH = pair.degenerate
    checks = {"residual": ok_res, "ordering": ok_order}
    if degenerate_at_cH is not None:
        checks["degenerate_at_hardy_constant"] = degenerate_at_cH
    return TaskResult({"hardy_constant": cH, "gamma_star": params.gamma_star, "rows": len(rows)}, checks,
                      {"exponents": (["lambda", "gamma_minus", "gamma_plus", "degenerate", "residual_minus",
                                      "residual_plus"], rows)})


def task_solve_radial(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    V = make_potential(sc.potential, params)
    st = sc.settings
    r_lo, r_hi = float(st.get("r_lo", 1.0)), float(st.get("r_hi", 10.0))
    a = float(st.get("a", 1.0))
    gamma = None
    if "b" in st:
        b = float(st["b"])
    else:
        gamma = _expected_gamma(V, params, math.inf)
        if gamma is None:
            raise PreconditionError("solve-radial needs 'b' unless the potential is pure Hardy")
        b = a * (r_hi / r_lo) ** gamma
    sol = radial.bvp_dirichlet(params, V, r_lo, r_hi, a, b, method=st.get("method", "shooting"),
                               n=int(st.get("n", 2048)))
    checks = {"positive": bool(np.all(sol.v > 0)),
              "boundary": abs(sol.v[0] - a) <= 1e-8 * a and abs(sol.v[-1] - b) <= 1e-8 * b}
    summary = {"method": sol.info.get("method"), "nodes": int(sol.grid.size)}
    if gamma is not None:
        err = float(np.max(np.abs(sol.v / (a * (sol.grid / r_lo) ** gamma) - 1.0)))
        summary["max_relative_error_vs_power"] = err
        checks["power_oracle"] = err < _tol(sc, "radial_power_error")
    return TaskResult(summary, checks, {"solution": (["r", "v", "w"], zip(sol.grid, sol.v, sol.w))})


def _classify_source(sc: Scenario, params: Params, V: Potential):
    st = sc.settings
    src = st.get("source", "fundamental")
    r_lo, r_hi = float(st.get("r_lo", 1e-4)), float(st.get("r_hi", 1e4))
    grid = log_grid(r_lo, r_hi)
    if src == "constant":
        return radial.radial_from_values(grid, np.full_like(grid, float(st.get("value", 1.0))), params, V)
    if src == "fundamental":
        mu = fundamental_solution(params, grid)
        shift = float(st.get("shift", 0.0))
        if params.p == params.d:
            # positive branch toward the requested end
            mu = -mu if _zeta(st.get("zeta", 0)) == 0.0 else mu
            shift = shift or 1.0 + abs(math.log(min(r_lo, 1 / r_hi)))
        return radial.radial_from_values(grid, mu + shift, params, V)
    if src == "ivp":
        return radial.ivp_solve(params, V, float(st.get("r0", 1.0)), float(st.get("v0", 1.0)),
                                float(st.get("slope0", 0.0)), float(st.get("r_end", r_lo)))
    raise ScenarioParseError(f"unknown classify source {src!r}")


def task_classify(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    V = make_potential(sc.potential, params)
    zeta = _zeta(sc.settings.get("zeta", 0))
    sol = _classify_source(sc, params, V)
    rep = radial.classify_asymptotics(sol, zeta, params)
    checks = {"determined": rep.klass != "undetermined"}
    if "expect" in sc.settings:
        checks["expected_class"] = rep.klass == sc.settings["expect"]
    if "expect_exponent" in sc.settings:
        checks["expected_exponent"] = abs(rep.exponent - float(sc.settings["expect_exponent"])) < _tol(
            sc, "classify_exponent")
    doc = {"zeta": zeta, "class": rep.klass, "exponent": rep.exponent, "constant": rep.constant,
           "residual": rep.residual, "window": list(rep.window), "coefficients": rep.coefficients}
    return TaskResult(doc, checks, {"solution": (["r", "v"], zip(sol.grid, sol.v))}, {"asymptotics": doc})


def task_minimal_growth(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    V = make_potential(sc.potential, params)
    st = sc.settings
    zeta = _zeta(st.get("zeta", 0))
    res = radial.minimal_growth_exhaustion(params, V, zeta, float(st.get("r_anchor", 1.0)),
                                           int(st.get("n_stages", 30)))
    checks = {"converged": res.converged}
    summary = {"zeta": zeta, "exponent": res.exponent, "stages": len(res.stages)}
    target = _expected_gamma(V, params, zeta)
    if target is not None:
        summary["expected_exponent"] = target
        checks["exponent"] = abs(res.exponent - target) < _tol(sc, "exhaustion_exponent")
    stage_rows = [(s["stage"], s["r_inner"], s["r_outer"], s["exponent"]) for s in res.stages]
    sol = res.solution
    return TaskResult(summary, checks, {"solution": (["r", "v", "w"], zip(sol.grid, sol.v, sol.w)),
                                        "stages": (["stage", "r_inner", "r_outer", "exponent"], stage_rows)})


def _sequence(spec) -> DilationSequence:
    kind = spec.get("kind", "geometric")
    if kind == "shell":
        return shell_sequence(int(spec.get("n", 8)))
    if kind == "geometric":
        return DilationSequence.geometric(_zeta(spec.get("zeta", 0)), int(spec.get("n", 40)),
                                          float(spec.get("ratio", 2.0)), float(spec.get("start", 1.0)))
    if kind == "explicit":
        return DilationSequence(tuple(float(x) for x in spec["radii"]), _zeta(spec.get("zeta", 0)))
    raise ScenarioParseError(f"unknown dilation sequence kind {kind!r}")


def task_dilate(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    V = make_potential(sc.potential, params)
    st = sc.settings
    seqs = [_sequence(s) for s in st.get("sequences", [{"kind": "shell"}, {"kind": "shell"}])]
    rep = weak_fuchsian_check(V, seqs, params, tol=float(st.get("probe_tol", 1e-6)))
    rows = []
    for k, pr in enumerate(rep.probes, start=1):
        rows.extend((k, R, w) for R, w in zip(pr.radii, pr.max_deviation))
    checks = {}
    if "expect_weak_fuchsian" in st:
        checks["weak_fuchsian"] = rep.weak_fuchsian == bool(st["expect_weak_fuchsian"])
    if "expect_stages" in st:
        checks["stages"] = rep.stages_used == int(st["expect_stages"])
    if "expect_fixed_point" in st:
        checks["fixed_point"] = rep.fixed_point == bool(st["expect_fixed_point"])
    summary = {"weak_fuchsian": rep.weak_fuchsian, "stages_used": rep.stages_used, "fixed_point": rep.fixed_point,
               "note": rep.note, "alternatives": len(rep.alternatives)}
    return TaskResult(summary, checks, {"probes": (["stage", "radius", "worst_deviation"], rows)})


def task_lq(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    V = make_potential(sc.potential, params)
    st = sc.settings
    rep = lq_criterion(V, float(st.get("q", 1.05 * params.d / params.p)), params, _zeta(st.get("zeta", 0)))
    checks = {}
    if "expect" in st:
        checks["certified"] = rep.certified == bool(st["expect"])
    summary = {"q": rep.q, "zeta": rep.zeta, "norm": rep.norm_estimate, "finite": rep.norm_finite,
               "exponent_ok": rep.exponent_ok, "certified": rep.certified}
    return TaskResult(summary, checks, {"shells": (["k", "integral"], enumerate(rep.shell_integrals))})


def task_energy(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    st = sc.settings
    if st.get("mode", "profile") == "scan":
        lam = float(st.get("lambda_factor", 1.2)) * hardy_constant(params)
        scan = variational.supercritical_scan(params, lam)
        checks = {}
        if "expect_negative" in st:
            checks["negative_found"] = (scan.best_energy < 0) == bool(st["expect_negative"])
        return TaskResult({"lambda": lam, "best_energy": scan.best_energy}, checks,
                          {"scan": (["decades", "ramp", "energy"], scan.table)})
    V = make_potential(sc.potential, params)
    prof = variational.power_cutoff(float(st.get("gamma", params.gamma_star)), float(st.get("r_in", 1.0)),
                                    float(st.get("r_out", 1e3)), float(st.get("ramp", 1.0)))
    e = variational.energy(params, V, prof)
    checks = {}
    if "expect_nonnegative" in st:
        checks["sign"] = (e >= 0) == bool(st["expect_nonnegative"])
    return TaskResult({"energy": e}, checks)


def _need_plane(params: Params):
    if params.d != 2:
        raise PreconditionError("this task works in the plane (d = 2)")


def task_picone(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    _need_plane(params)
    st = sc.settings
    aperture = float(st.get("aperture", math.pi / 2))
    ks = [float(k) for k in st.get("ks", [8, 16, 32, 64, 128])]
    which = st.get("which", "singular")
    exps = sector_exponents(params.p, aperture)
    u0 = variational.separable_profile(exps, which)
    rows = []
    for k in ks:
        chi = variational.cone_cutoff(k)
        res = variational.picone_integral(params.p, u0.times_radial(chi), u0, 1.0, 2 * k, aperture,
                                          n_r=int(st.get("n_r", 1025)), n_theta=int(st.get("n_theta", 513)),
                                          breakpoints=(k,))
        rows.append((k, res.integral, res.min_value))
    decay = rows[0][1] / rows[-1][1] if rows[-1][1] > 0 else math.inf
    checks = {"nonnegative": min(r[2] for r in rows) >= -_tol(sc, "picone_floor")}
    if params.p >= params.d:
        checks["decay"] = decay >= _tol(sc, "picone_decay")
    return TaskResult({"beta": exps._pick(which)[0], "decay_factor": decay}, checks,
                      {"picone": (["k", "integral", "min_lagrangian"], rows)})


def task_kelvin(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    st = sc.settings
    cases = st.get("cases", [[1.0, -0.5], [2.0, 0.7], [1.0, 3.0], [0.5, -0.05], [3.0, 0.0001]])
    spec = variational.WeightedOperatorSpec.kelvin(params)
    plain = variational.WeightedOperatorSpec(0.0, params)
    rows = []
    for i, (v0, s0) in enumerate(cases):
        u = radial.ivp_solve(params, Potential(), float(st.get("r0", 1.0)), float(v0), float(s0),
                             float(st.get("r_end", 100.0)))
        K = variational.kelvin_transform(u)
        KK = variational.kelvin_transform(K)
        inv = float(max(np.max(np.abs(KK.v - u.v) / np.abs(u.v)), np.max(np.abs(KK.grid / u.grid - 1))))
        rows.append((i, variational.weighted_residual(K, spec), variational.weighted_residual(u, plain), inv))
    checks = {"weighted_residual": max(r[1] for r in rows) < _tol(sc, "kelvin_residual"),
              "involution": max(r[3] for r in rows) < _tol(sc, "kelvin_involution")}
    return TaskResult({"beta": spec.beta, "max_residual": max(r[1] for r in rows)}, checks,
                      {"kelvin": (["case", "weighted_residual", "plain_residual", "involution_error"], rows)})


def task_capacity(sc: Scenario) -> TaskResult:
    st = sc.settings
    base = sc.params or {"p": 3.0, "d": 2}
    cases = st.get("cases") or [{"p": base["p"], "d": base["d"], "r": 0.5, "R": 4.0}]
    n = int(st.get("n", 16384))
    rows = []
    for c in cases:
        params = Params(float(c["p"]), int(c["d"]))
        beta = float(c["beta"]) if "beta" in c else 2.0 * (params.p - params.d)
        res = variational.weighted_capacity(params, beta, float(c["r"]), float(c["R"]), n=n)
        rows.append((params.p, params.d, beta, float(c["r"]), float(c["R"]), res.alpha, res.closed_form,
                     res.numerical, res.relative_gap))
    checks = {"agreement": max(r[-1] for r in rows) < _tol(sc, "capacity_gap")}
    return TaskResult({"cases": len(rows), "max_gap": max(r[-1] for r in rows)}, checks,
                      {"capacity": (["p", "d", "beta", "r", "R", "alpha", "closed_form", "numerical",
                                     "relative_gap"], rows)})


def task_flux(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    st = sc.settings
    beta = float(st.get("beta", 2.0 * (params.p - params.d)))
    spec = variational.WeightedOperatorSpec(beta, params)
    if spec.alpha == 0:
        raise PreconditionError("alpha = 0: r^alpha is constant and carries no flux")
    r_lo, r_hi = float(st.get("r_lo", 0.1)), float(st.get("r_hi", 100.0))
    v = variational.power_profile(spec.alpha, r_lo, r_hi)
    cuts = variational.random_cutoffs(int(st.get("n_cutoffs", 5)), r_lo * 1.5, r_hi / 1.5, int(st.get("seed", 0)))
    rep = variational.flux_constant(v, cuts, spec)
    exact = variational.power_flux_exact(spec)
    checks = {"spread": rep.spread < _tol(sc, "flux_spread"),
              "exact": max(abs(k - exact) for k in rep.values) <= _tol(sc, "flux_spread") * abs(exact)}
    return TaskResult({"alpha": spec.alpha, "exact": exact, "spread": rep.spread}, checks,
                      {"flux": (["cutoff", "k"], enumerate(rep.values))})


def _domain(st) -> polar2d.PolarDomain:
    ap = st.get("aperture")
    return polar2d.PolarDomain(float(st.get("r_lo", 1.0)), float(st.get("r_hi", 10.0)),
                               None if ap is None else float(compile_expression(str(ap), ())()))


def _arc_data(expr, radius):
    f = compile_expression(str(expr), ("r", "theta"))
    return lambda t: f(r=radius, theta=t)


def task_solve_2d(sc: Scenario) -> TaskResult:
    params = make_params(sc.params)
    _need_plane(params)
    V = make_potential(sc.potential, params)
    st = sc.settings
    dom = _domain(st)
    n_r = st.get("n_r")
    fld = polar2d.solve_dirichlet_2d(params, V, dom, _arc_data(st.get("inner", "1"), dom.r_lo),
                                     _arc_data(st.get("outer", "1"), dom.r_hi),
                                     None if n_r is None else int(n_r), st.get("n_theta"))
    crit = polar2d.critical_set_diagnostics(fld)
    summary = {"residual": fld.info["residual"], "eps_min": fld.info["eps_min"], "n_r": fld.info["n_r"],
               "n_theta": fld.info["n_theta"], "critical_nodes": crit.n_critical,
               "complement_components": crit.components, "critical_touches_boundary": crit.touches_boundary}
    checks = {"residual": fld.info["residual"] < _tol(sc, "residual_2d")}
    if params.p != 2.0:
        checks["positive"] = bool(np.all(fld.interior_values()[1:-1] > 0))
    if "exact" in st:
        f = compile_expression(str(st["exact"]), ("r", "theta"))
        R, T = np.meshgrid(fld.r, fld.theta, indexing="ij")
        ex = f(r=R, theta=T) * np.ones_like(R)
        summary["max_error_vs_exact"] = float(np.max(np.abs(fld.u - ex)) / np.max(np.abs(ex)))
        if "exact_tol" in st:
            checks["exact"] = summary["max_error_vs_exact"] < float(st["exact_tol"])
    return TaskResult(summary, checks, {"field": (["r", "theta", "u"], fld.to_rows())})


def _harnack_scenario(st) -> polar2d.HarnackScenario:
    kw = {}
    for key in ("p", "lam_fraction", "r_lo", "r_hi", "inner_factor_v"):
        if key in st:
            kw[key] = float(st[key])
    for key in ("n_theta", "per_decade"):
        if key in st:
            kw[key] = int(st[key])
    for key in ("perturb_u", "perturb_v"):
        if key in st:
            kw[key] = tuple((int(k), float(a)) for k, a in st[key])
    return polar2d.HarnackScenario(**kw)


def harnack_checks(rep: polar2d.HarnackReport, final_tol: float) -> dict:
    r = rep.dyadic_ratio
    return {"monotone_m": rep.monotone_m, "monotone_M": rep.monotone_M,
            "ratio_decreasing": bool(np.all(np.diff(r) <= 1e-12 * r[:-1])),
            "final_ratio": bool(r[-1] < final_tol), "bounded": bool(np.isfinite(rep.uniform_bound))}


def task_harnack(sc: Scenario) -> TaskResult:
    hs = _harnack_scenario(sc.settings)
    u, v = polar2d.harnack_pair(hs)
    rep = polar2d.harnack_profile(u, v, 0.0)
    checks = harnack_checks(rep, _tol(sc, "harnack_final_ratio"))
    summary = {"uniform_bound": rep.uniform_bound, "final_ratio": float(rep.dyadic_ratio[-1]),
               "limit_class": rep.limit_class, "residual_u": u.info["residual"], "residual_v": v.info["residual"]}
    return TaskResult(summary, checks, {
        "harnack": (["r", "m", "M", "ratio"], zip(rep.dyadic_radii, rep.dyadic_m, rep.dyadic_M, rep.dyadic_ratio)),
        "harnack_full": (["r", "m", "M", "ratio"], zip(rep.radii, rep.m, rep.M, rep.ratio))})


def task_probe(sc: Scenario) -> TaskResult:
    st = sc.settings
    mode = st.get("mode", "harnack")
    zeta = _zeta(st.get("zeta", 0))
    if mode == "harnack":
        u, v = polar2d.harnack_pair(_harnack_scenario(st))
    elif mode in ("scaled", "sector"):
        p = float((sc.params or {}).get("p", 3.0))
        ap = float(st.get("aperture", math.pi / 2))
        exps = sector_exponents(p, ap)
        dom = polar2d.PolarDomain(float(st.get("r_lo", 1e-2)), float(st.get("r_hi", 1.0)), ap)
        prm = Params(p, 2)
        which_v = "regular"
        v = polar2d.sample_field(dom, prm, lambda R, T: R ** exps.beta_regular * exps.profile(which_v, T))
        if mode == "scaled":
            u = polar2d.sample_field(dom, prm, lambda R, T: 2.0 * R ** exps.beta_regular * exps.profile(which_v, T))
        else:
            u = polar2d.sample_field(dom, prm, lambda R, T: R ** exps.beta_singular * exps.profile("singular", T))
    else:
        raise ScenarioParseError(f"unknown probe mode {mode!r}")
    rep = polar2d.regular_point_probe(u, v, zeta)
    checks = {}
    if "expect" in st:
        checks["limit_class"] = rep.limit_class == st["expect"]
    if "expect_value" in st:
        checks["limit_value"] = abs(rep.limit_value - float(st["expect_value"])) < 1e-6 * abs(float(st["expect_value"]))
    prof = rep.profile
    summary = {"limit_class": rep.limit_class, "limit_value": rep.limit_value, "status": rep.status,
               "evidence": rep.evidence}
    return TaskResult(summary, checks, {"probe": (["r", "m", "M", "ratio"], zip(
        prof.dyadic_radii, prof.dyadic_m, prof.dyadic_M, prof.dyadic_ratio))})


def task_sector(sc: Scenario) -> TaskResult:
    st = sc.settings
    p = float((sc.params or {}).get("p", 2.0))
    ap = float(compile_expression(str(st.get("aperture", "pi/2")), ())())
    exps = sector_exponents(p, ap)
    res_r = angular_residual(exps, "regular")
    res_s = angular_residual(exps, "singular")
    summary = {"p": p, "aperture": ap, "beta_regular": exps.beta_regular, "beta_singular": exps.beta_singular,
               "angular_residual_regular": res_r, "angular_residual_singular": res_s}
    checks = {"angular_residual": max(res_r, res_s) < _tol(sc, "angular_residual"),
              "signs": exps.beta_singular < 0 < exps.beta_regular}
    if "expect_regular" in st:
        checks["expected_regular"] = abs(exps.beta_regular - float(compile_expression(
            str(st["expect_regular"]), ())())) < 1e-8
    if st.get("solve_2d", False):
        dom = polar2d.PolarDomain(float(st.get("r_lo", 1.0)), float(st.get("r_hi", 10.0)), ap)
        chk = polar2d.sector_separable_check(exps, dom, which=("regular",), n_r=st.get("n_r"),
                                              n_theta=st.get("n_theta"))
        summary.update({"fitted_beta": chk.fitted_beta["regular"], "beta_gap": chk.beta_gap["regular"],
                        "solve_gap": chk.solve_gap["regular"], "ansatz_residual": chk.ansatz_residual["regular"]})
        checks["beta_gap"] = chk.beta_gap["regular"] < _tol(sc, "sector_gap")
    th = exps.theta
    return TaskResult(summary, checks, {"profiles": (["theta", "phi_regular", "phi_singular"], zip(
        th, exps.profile_regular, exps.profile_singular))})


TASKS: dict[str, Callable[[Scenario], TaskResult]] = {
    "exponents": task_exponents,
    "solve-radial": task_solve_radial,
    "classify": task_classify,
    "minimal-growth": task_minimal_growth,
    "dilate": task_dilate,
    "lq-check": task_lq,
    "energy": task_energy,
    "picone": task_picone,
    "kelvin": task_kelvin,
    "capacity": task_capacity,
    "flux": task_flux,
    "solve-2d": task_solve_2d,
    "harnack": task_harnack,
    "probe": task_probe,
    "sector": task_sector,
}


# ---------------------------------------------------------------------------
# built-in library
# ---------------------------------------------------------------------------

BUILTIN: dict[str, dict] = {
    "hardy-exponents": {"task": "exponents", "params": {"p": 2.5, "d": 3}, "settings": {"n_lambda": 21}},
    "empty-potential-classify": {"task": "classify", "params": {"p": 2.5, "d": 3},
                                 "settings": {"source": "constant", "value": 2.0, "zeta": 0,
                                              "expect": "bounded-limit"}},
    "fundamental-classify": {"task": "classify", "params": {"p": 2.5, "d": 3},
                             "settings": {"source": "fundamental", "zeta": 0, "expect": "power",
                                          "expect_exponent": -1.0 / 3.0}},
    "hardy-radial": {"task": "solve-radial", "params": {"p": 3.0, "d": 2}, "potential": {"hardy_fraction": 0.5},
                     "settings": {"method": "fd", "n": 4096}},
    "hardy-minimal-growth": {"task": "minimal-growth", "params": {"p": 2.5, "d": 3},
                             "potential": {"hardy_fraction": 0.5}, "settings": {"zeta": 0}},
    "shell-dilation": {"task": "dilate", "params": {"p": 3.0, "d": 2}, "potential": {"builtin": "example-shells"},
                       "settings": {"sequences": [{"kind": "shell"}, {"kind": "shell"}],
                                    "expect_weak_fuchsian": True, "expect_stages": 2}},
    "hardy-dilation": {"task": "dilate", "params": {"p": 3.0, "d": 2}, "potential": {"hardy_fraction": 0.5},
                       "settings": {"sequences": [{"kind": "geometric", "n": 20}, {"kind": "geometric", "n": 20}],
                                    "expect_weak_fuchsian": False, "expect_fixed_point": True}},
    "lq-subcritical": {"task": "lq-check", "params": {"p": 1.5, "d": 3},
                       "potential": {"shells": [[0.0, 1.0, 1.0, -1.4]]},
                       "settings": {"q": 2.1, "zeta": 0, "expect": True}},
    "hardy-energy-scan": {"task": "energy", "params": {"p": 2.0, "d": 3},
                          "settings": {"mode": "scan", "lambda_factor": 1.2, "expect_negative": True}},
    "sector-picone": {"task": "picone", "params": {"p": 2.0, "d": 2}, "settings": {"aperture": math.pi / 2}},
    "kelvin-radial": {"task": "kelvin", "params": {"p": 3.0, "d": 2}},
    "capacity-table": {"task": "capacity", "params": {"p": 3.0, "d": 2},
                       "settings": {"cases": [{"p": 3.0, "d": 2, "r": 0.5, "R": 4.0},
                                              {"p": 2.0, "d": 3, "beta": 0.0, "r": 1.0, "R": 3.0}]}},
    "flux-random": {"task": "flux", "params": {"p": 3.0, "d": 2}, "settings": {"seed": 7}},
    "harmonic-annulus": {"task": "solve-2d", "params": {"p": 2.0, "d": 2},
                         "settings": {"r_lo": 1.0, "r_hi": 10.0, "inner": "r*cos(theta)", "outer": "r*cos(theta)",
                                      "exact": "r*cos(theta)", "exact_tol": 1e-3, "n_r": 128, "n_theta": 128}},
    "hardy-harnack": {"task": "harnack", "params": {"p": 3.0, "d": 2}},
    "hardy-probe": {"task": "probe", "params": {"p": 3.0, "d": 2}, "settings": {"mode": "harnack", "expect": "finite"}},
    "sector-quarter": {"task": "sector", "params": {"p": 3.0, "d": 2},
                       "settings": {"aperture": "pi/2", "solve_2d": True}},
}

DEFAULT_FOR_TASK = {
    "exponents": "hardy-exponents", "solve-radial": "hardy-radial", "classify": "empty-potential-classify",
    "minimal-growth": "hardy-minimal-growth", "dilate": "shell-dilation", "lq-check": "lq-subcritical",
    "energy": "hardy-energy-scan", "picone": "sector-picone", "kelvin": "kelvin-radial",
    "capacity": "capacity-table", "flux": "flux-random", "solve-2d": "harmonic-annulus",
    "harnack": "hardy-harnack", "probe": "hardy-probe", "sector": "sector-quarter",
}


def builtin(name: str) -> Scenario:
    data = copy.deepcopy(BUILTIN[name])
    return Scenario(name, data["task"], data.get("params"), data.get("potential"), data.get("settings", {}),
                    data.get("tolerances", {}))


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------


def apply_overrides(sc: Scenario, grid: int | None = None, seed: int | None = None,
                    tolerances: dict | None = None) -> Scenario:
    sc = copy.deepcopy(sc)
    if grid is not None:
        key = {"solve-radial": "n", "capacity": "n", "solve-2d": "n_r", "sector": "n_r"}.get(sc.task)
        if key is None:
            raise UsageError(f"--grid has no meaning for task {sc.task!r}")
        sc.settings[key] = int(grid)
    if seed is not None:
        if sc.task != "flux":
            raise UsageError("--seed only applies to the randomized cutoffs of the flux task")
        sc.settings["seed"] = int(seed)
    for k, v in (tolerances or {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise UsageError(f"unknown tolerance {k!r}; known: {', '.join(sorted(DEFAULT_TOLERANCES))}")
        sc.tolerances[k] = float(v)
    return sc


def run(sc: Scenario, out: str | Path | None = None, fmt: str = "csv", strict: bool = False) -> RunRecord:
    """Execute a scenario; write artifacts to ``out`` when given.

    ``record.json`` holds everything needed to rerun the scenario and is
    byte-stable; the wall time goes to ``timing.json``.
    """
    if sc.task not in TASKS:
        raise UsageError(f"unknown task {sc.task!r}")
    t0 = time.perf_counter()
    res = TASKS[sc.task](sc)
    wall = time.perf_counter() - t0
    checks = {k: bool(v) for k, v in res.checks.items()}
    record = RunRecord(sc.name, __version__, sc.to_dict(), wall, res.summary, checks)
    if out is not None:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in res.tables.items():
            rows = list(rows)
            if fmt == "json":
                write_json(out / f"{name}.json", {"columns": list(header), "rows": [list(r) for r in rows]})
                record.artifacts.append(f"{name}.json")
            else:
                write_csv(out / f"{name}.csv", header, rows)
                record.artifacts.append(f"{name}.csv")
        for name, doc in res.documents.items():
            write_json(out / f"{name}.json", doc)
            record.artifacts.append(f"{name}.json")
        write_json(out / "record.json", record.to_dict())
        write_json(out / "timing.json", {"wall_time": wall})
    if strict and not record.passed:
        failed = [k for k, v in checks.items() if not v]
        raise CheckFailure(f"scenario {sc.name!r}: failed checks {failed}")
    return record


def rerun_record(path: str | Path) -> RunRecord:
    """Re-execute the configuration embedded in a record.json."""
    import json

    data = json.loads(Path(path).read_text())
    cfg = data["config"]
    sc = Scenario(cfg["name"], cfg["task"], cfg.get("params"), cfg.get("potential"), cfg.get("settings") or {},
                  cfg.get("tolerances") or {})
    return run(sc)
