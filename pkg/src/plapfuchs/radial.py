"""Radial solutions of -Delta_p u + V |u|^{p-2} u = 0.

Writing u(x) = v(r) and w = r^{d-1} Phi_p(v'), the equation becomes

    v' = Phi_p^{-1}(w / r^{d-1}),      w' = r^{d-1} V(r) Phi_p(v).

All integration is done in t = log r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import DomainError, NumericError, PreconditionError, SolvabilityError
from .exponents import Params
from .numerics import DEFAULT_PER_DECADE, log_grid, phi_p, phi_p_inv
from .potentials import Potential

FLUX_DELTA = 1e-14
FIT_DECADES = 1.5
FIT_THRESHOLD = 1e-3


@dataclass(frozen=True)
class RadialSolution:
    grid: np.ndarray
    v: np.ndarray
    w: np.ndarray
    params: Params
    potential: Potential | None = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size < 2 or np.any(np.diff(g) <= 0):
            raise DomainError("radial grid must be strictly increasing")

    @property
    def r_min(self) -> float:
        return float(self.grid[0])

    @property
    def r_max(self) -> float:
        return float(self.grid[-1])

    def slope(self) -> np.ndarray:
        """v'(r) recovered from the flux."""
        return phi_p_inv(self.w / self.grid ** (self.params.d - 1), self.params.p)

    def __call__(self, r):
        """Cubic interpolation in log r (no extrapolation)."""
        r = np.asarray(r, dtype=float)
        if np.any(r < self.r_min * (1 - 1e-12)) or np.any(r > self.r_max * (1 + 1e-12)):
            raise DomainError("evaluation outside the solution's radial range")
        spl = CubicSpline(np.log(self.grid), self.v)
        return spl(np.log(np.clip(r, self.r_min, self.r_max)))


def radial_from_values(grid, v, params: Params, potential: Potential | None = None, **info) -> RadialSolution:
    """Wrap sampled values; the flux is rebuilt from finite differences in log r."""
    grid = np.asarray(grid, dtype=float)
    v = np.asarray(v, dtype=float)
    dv_dt = np.gradient(v, np.log(grid), edge_order=2)
    w = grid ** (params.d - 1) * phi_p(dv_dt / grid, params.p)
    return RadialSolution(grid, v, w, params, potential, dict(info))


def _flux_inverse(p: float, delta: float):
    if p <= 2.0:
        return lambda t: phi_p_inv(t, p)
    expo = (2.0 - p) / (p - 1.0)
    # regularized near w = 0, where the exact inverse is not Lipschitz
    return lambda t: t * (abs(t) + delta) ** expo


def _jumps(V: Potential) -> list[float]:
    pts = [b for sh in V.shells for b in (sh.r_lo, sh.r_hi) if 0 < b < math.inf]
    if V.sampled_r is not None and len(V.sampled_r):
        pts += [float(V.sampled_r[0]), float(V.sampled_r[-1])]
    return pts


def _rhs(params: Params, V: Potential, delta: float):
    p, d = params.p, params.d
    inv = _flux_inverse(p, delta)

    def f(t, y):
        r = math.exp(t)
        v, w = y
        dv = r * inv(w) / r ** ((d - 1) / (p - 1.0))
        dw = r**d * float(V.radial(np.array(r), p)) * (math.copysign(abs(v) ** (p - 1.0), v) if v != 0 else 0.0)
        return [dv, dw]

    return f


def ivp_solve(params: Params, V: Potential, r0: float, v0: float, slope0: float, r_end: float,
              per_decade: int = DEFAULT_PER_DECADE, rtol: float = 1e-12, halt_at_zero: bool = True) -> RadialSolution:
    """Integrate from r0 (either direction) with v(r0)=v0, v'(r0)=slope0.

    If v reaches zero the integration stops; the partial solution carries
    ``info['hit_zero'] = True`` and ``info['r_zero']``.
    """
    if not (r0 > 0 and r_end > 0):
        raise DomainError("ivp_solve needs r0, r_end > 0")
    if not v0 > 0 and halt_at_zero:
        raise DomainError("ivp_solve needs v0 > 0")
    p, d = params.p, params.d
    w0 = r0 ** (d - 1) * float(phi_p(slope0, p))
    wscale = max(abs(w0), r0 ** (d - 1) * abs(v0 / r0) ** (p - 1.0), 1e-300)
    rhs = _rhs(params, V, FLUX_DELTA * wscale)
    t0, t1 = math.log(r0), math.log(r_end)
    t_eval = np.log(log_grid(r0, r_end, per_decade)) if r0 != r_end else np.array([t0])
    t_eval[0], t_eval[-1] = t0, t1
    events = None
    if halt_at_zero:

        def hit(t, y):
            return y[0]

        hit.terminal = True
        hit.direction = -1
        events = [hit]
    atol = [1e-30 * abs(v0) + 1e-300, 1e-30 * wscale]
    # restart at the potential's jumps so the step control never straddles one
    cuts = sorted({math.log(b) for b in _jumps(V) if min(t0, t1) < math.log(b) < max(t0, t1)},
                  reverse=t1 < t0)
    edges = [t0, *cuts, t1]
    ts, ys = [], []
    y = [v0, w0]
    hit_at = None
    for a_, b_ in zip(edges[:-1], edges[1:]):
        inside = t_eval[((t_eval - a_) * (t_eval - b_) <= 0) & (t_eval != a_ if ts else True)]
        extra = not (inside.size and inside[-1] == b_)
        t_piece = np.append(inside, b_) if extra else inside
        lo_, hi_ = min(a_, b_) + 1e-13, max(a_, b_) - 1e-13

        def piece_rhs(t, y, lo_=lo_, hi_=hi_):
            # one-sided values of the potential at the jumps
            return rhs(min(max(t, lo_), hi_), y)

        sol = solve_ivp(piece_rhs, (a_, b_), y, method="DOP853", t_eval=t_piece, rtol=rtol, atol=atol, events=events)
        if sol.status == -1:
            t_done = np.asarray(sol.t)
            reached = math.exp(t_done[-1]) if t_done.size else math.exp(a_)
            raise NumericError(f"radial integration failed near r={reached:.6g}: {sol.message}",
                               reached_radius=reached)
        tt, yy = np.asarray(sol.t), np.asarray(sol.y).reshape(2, -1)
        if halt_at_zero and sol.t_events[0].size:
            ts.append(tt)
            ys.append(yy)
            hit_at = float(sol.t_events[0][0])
            break
        y = [float(yy[0, -1]), float(yy[1, -1])]
        if extra:
            tt, yy = tt[:-1], yy[:, :-1]
        ts.append(tt)
        ys.append(yy)
    t_all = np.concatenate(ts)
    y_all = np.concatenate(ys, axis=1)
    info = {"hit_zero": False, "r0": r0, "r_end": r_end}
    r = np.exp(t_all)
    v, w = y_all
    if hit_at is not None:
        info["hit_zero"] = True
        info["r_zero"] = float(math.exp(hit_at))
        keep = v > 0
        r, v, w = r[keep], v[keep], w[keep]
    if r.size >= 2 and r[0] > r[-1]:
        r, v, w = r[::-1], v[::-1], w[::-1]
    if r.size < 2:
        raise NumericError("solution left the positive cone immediately", reached_radius=r0)
    return RadialSolution(r, v, w, params, V, info)


# ---------------------------------------------------------------------------
# Dirichlet problems on annuli
# ---------------------------------------------------------------------------


def _shoot_end(params, V, r_lo, r_hi, a, s, per_decade):
    sol = ivp_solve(params, V, r_lo, a, s, r_hi, per_decade=per_decade)
    if sol.info["hit_zero"]:
        r_star = sol.info["r_zero"]
        return None, -(1.0 + math.log(r_hi / r_star)), sol
    return sol.v[-1], None, sol


def _shooting(params, V, r_lo, r_hi, a, b, per_decade, max_expand=80):
    def g(s):
        try:
            end, miss, _ = _shoot_end(params, V, r_lo, r_hi, a, s, per_decade)
        except NumericError as exc:
            # only upward blow-up is possible for positive data
            reached = exc.info.get("reached_radius", r_lo)
            return b * (1.0 + math.log(r_hi / reached))
        if end is None:
            return b * miss
        return end - b

    # initial slope from the V=0 interpolant
    alpha = params.fundamental_exponent
    if params.p == params.d:
        s0 = (b - a) / math.log(r_hi / r_lo) / r_lo
    else:
        s0 = (b - a) * alpha * r_lo ** (alpha - 1) / (r_hi**alpha - r_lo**alpha)
    step = max(abs(s0), (a + b) / r_lo, 1e-3)
    g0 = g(s0)
    lo = hi = s0
    glo = ghi = g0
    for _ in range(max_expand):
        if g0 == 0:
            break
        if g0 < 0:
            hi = s0 + step
            ghi = g(hi)
            if ghi >= 0:
                break
            lo, glo = hi, ghi
            s0 = hi
        else:
            lo = s0 - step
            glo = g(lo)
            if glo <= 0:
                break
            hi, ghi = lo, glo
            s0 = lo
        step *= 2.0
    else:
        raise SolvabilityError("no positive solution bracketed by shooting", r_lo=r_lo, r_hi=r_hi, a=a, b=b)
    if g0 == 0:
        s = s0
    else:
        s = optimize.brentq(g, lo, hi, xtol=1e-15 * max(1.0, abs(lo), abs(hi)), rtol=1e-15, maxiter=400)
    sol = ivp_solve(params, V, r_lo, a, s, r_hi, per_decade=per_decade)
    if sol.info["hit_zero"] or abs(sol.v[-1] - b) > 1e-8 * max(a, b):
        raise SolvabilityError("shooting did not hit the outer datum", slope=s, r_lo=r_lo, r_hi=r_hi)
    return sol


def _fd_solve(params, V, r_lo, r_hi, a, b, n, init=None, tol=1e-13, max_iter=60):
    """Second-order conservative finite differences in t = log r, damped Newton.

    d/dt [e^{(d-p)t} Phi_p(v_t)] = e^{dt} V Phi_p(v).
    """
    p, d = params.p, params.d
    t = np.linspace(math.log(r_lo), math.log(r_hi), n + 1)
    h = t[1] - t[0]
    r = np.exp(t)
    r[0], r[-1] = r_lo, r_hi
    rho = np.exp((d - p) * 0.5 * (t[1:] + t[:-1]))
    src = np.exp(d * t[1:-1]) * V.radial(r[1:-1], p)
    if init is None:
        tau = (t - t[0]) / (t[-1] - t[0])
        v = a ** (1 - tau) * b**tau
    else:
        v = np.array(init, dtype=float)
    v[0], v[-1] = a, b
    slope_scale = max(a, b)

    def flux(D, eps):
        if p == 2.0:
            return D, np.ones_like(D)
        q = D * D + eps * eps
        f = q ** ((p - 2) / 2) * D
        df = q ** ((p - 4) / 2) * ((p - 1) * D * D + eps * eps)
        return f, df

    def residual(v, eps):
        D = np.diff(v) / h
        f, df = flux(D, eps)
        F = rho * f
        R = (F[1:] - F[:-1]) / h - src * phi_p(v[1:-1], p)
        return R, D, df

    eps_stages = [0.0] if p == 2.0 else [slope_scale * e for e in (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12)]
    history = []
    for eps in eps_stages:
        final = eps == eps_stages[-1]
        stage_tol = tol if final else 1e-8
        R, D, df = residual(v, eps)
        scale = np.max(np.abs(rho * flux(D, eps)[0])) / h + 1e-300
        for it in range(max_iter):
            rn = np.max(np.abs(R)) / scale
            history.append((eps, it, float(rn)))
            if rn < stage_tol:
                break
            m = n - 1
            k = rho * df / h**2  # coupling through each face
            diag = -(k[1:] + k[:-1]) - src * (p - 1) * np.abs(v[1:-1]) ** (p - 2)
            ab = np.zeros((3, m))
            ab[0, 1:] = k[1:-1]
            ab[1, :] = diag
            ab[2, :-1] = k[1:-1]
            try:
                dv = solve_banded((1, 1), ab, -R)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise NumericError("singular Jacobian in radial FD solve", history=history) from exc
            lam = 1.0
            for _ in range(40):
                vn = v.copy()
                vn[1:-1] += lam * dv
                if np.all(vn[1:-1] > 0):
                    Rn, Dn, dfn = residual(vn, eps)
                    if np.max(np.abs(Rn)) < (1 - 1e-4 * lam) * np.max(np.abs(R)) or lam < 1e-6:
                        break
                lam *= 0.5
            v, R, D, df = vn, Rn, Dn, dfn
            # residual floor from cancellation grows like n; accept a vanishing full step
            if np.max(np.abs(dv)) < 1e-13 * np.max(np.abs(v)) and np.max(np.abs(R)) / scale < 1e-10:
                rn = np.max(np.abs(R)) / scale
                history.append((eps, it + 1, float(rn)))
                break
        else:
            if final:
                raise NumericError("radial FD Newton stagnated", history=history, residual=float(rn))
    return r, v, history


def bvp_dirichlet(params: Params, V: Potential, r_lo: float, r_hi: float, a: float, b: float,
                  method: str = "shooting", n: int = 2048, per_decade: int = DEFAULT_PER_DECADE) -> RadialSolution:
    """Positive solution on [r_lo, r_hi] with v(r_lo)=a, v(r_hi)=b.

    ``method='shooting'`` bisects on the initial slope (monotone by the weak
    comparison principle) and falls back to finite differences on failure;
    ``method='fd'`` uses the n-interval finite-difference discretization.
    """
    if not (0 < r_lo < r_hi):
        raise DomainError("need 0 < r_lo < r_hi")
    if not (a > 0 and b > 0):
        raise DomainError("boundary data must be positive")
    if method == "shooting":
        try:
            sol = _shooting(params, V, r_lo, r_hi, a, b, per_decade)
            sol.info["method"] = "shooting"
            return sol
        except (SolvabilityError, NumericError) as exc:
            first = exc
        try:
            r, v, hist = _fd_solve(params, V, r_lo, r_hi, a, b, n)
        except NumericError:
            raise first
        return radial_from_values(r, v, params, V, method="fd-fallback", newton=hist)
    if method == "fd":
        r, v, hist = _fd_solve(params, V, r_lo, r_hi, a, b, n)
        if np.any(v <= 0):
            raise SolvabilityError("finite-difference solution is not positive")
        return radial_from_values(r, v, params, V, method="fd", newton=hist)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# minimal growth by exhaustion
# ---------------------------------------------------------------------------


def _power_fit(r, v):
    x, y = np.log(r), np.log(v)
    A = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    return float(coef[1]), float(math.exp(coef[0])), resid


def _window(sol: RadialSolution, lo: float, hi: float):
    m = (sol.grid >= lo * (1 - 1e-12)) & (sol.grid <= hi * (1 + 1e-12))
    return sol.grid[m], sol.v[m]


@dataclass
class ExhaustionResult:
    solution: RadialSolution
    exponent: float
    stages: list[dict]
    converged: bool


def minimal_growth_exhaustion(params: Params, V: Potential, zeta: float, r_anchor: float = 1.0,
                              n_stages: int = 30, stage_ratio: float = 4.0, eps: float = 1e-8,
                              tol: float = 1e-4, min_stages: int = 4,
                              per_decade: int = DEFAULT_PER_DECADE) -> ExhaustionResult:
    """Positive solution of minimal growth away from zeta, built on growing annuli.

    Stage k uses [r_anchor/4^k, 4^k r_anchor]; the side of the annulus that
    moves away from zeta carries (nearly) zero data, the other side is free
    and the profile is normalized by v(r_anchor)=1. Because the equation is
    homogeneous, the free side needs no separate solve: the stage solution
    is the initial-value solution leaving the zero side.

    The exponent is a log-log fit over 1.5 decades on the side away from zeta.
    """
    if zeta not in (0.0, math.inf):
        raise DomainError("zeta must be 0 or infinity")
    stages = []
    prev = None
    result = None
    for k in range(1, n_stages + 1):
        far = r_anchor * stage_ratio**k
        near = r_anchor / stage_ratio**k
        if zeta == 0.0:
            start, end, slope = far, near, -1.0 / far
            fit_lo, fit_hi = r_anchor, r_anchor * 10**FIT_DECADES
        else:
            start, end, slope = near, far, 1.0 / near
            fit_lo, fit_hi = r_anchor / 10**FIT_DECADES, r_anchor
        sol = ivp_solve(params, V, start, eps, slope, end, per_decade=per_decade)
        if sol.info["hit_zero"]:
            raise NumericError("exhaustion stage left the positive cone; no positive solution?",
                               stage=k, r_zero=sol.info["r_zero"], stages=stages)
        norm = float(sol(r_anchor))
        sol = replace(sol, v=sol.v / norm, w=sol.w / norm ** (params.p - 1.0))
        if fit_hi <= sol.r_max and fit_lo >= sol.r_min and far / near > 10 ** (2 * FIT_DECADES):
            rr, vv = _window(sol, fit_lo, fit_hi)
            expo, _, _ = _power_fit(rr, vv)
        else:
            expo = math.nan
        stages.append({"stage": k, "r_inner": end if zeta == 0.0 else start,
                       "r_outer": start if zeta == 0.0 else end, "exponent": expo})
        result = sol
        if k >= min_stages and prev is not None and math.isfinite(expo) and abs(expo - prev) < tol:
            sol.info.update(stages=stages)
            return ExhaustionResult(sol, expo, stages, True)
        prev = expo
    raise NumericError("exhaustion did not converge", stages=stages)


# ---------------------------------------------------------------------------
# asymptotic classification
# ---------------------------------------------------------------------------


@dataclass
class AsymptoticsReport:
    zeta: float
    klass: str  # bounded-limit | power | log | undetermined
    exponent: float
    constant: float
    residual: float
    window: tuple[float, float]
    coefficients: dict = field(default_factory=dict)


def classify_asymptotics(sol: RadialSolution, zeta: float, params: Params | None = None,
                         decades: float = FIT_DECADES, threshold: float = FIT_THRESHOLD) -> AsymptoticsReport:
    """Fit the last ``decades`` toward zeta against span{1, r^alpha} (span{1, log r} if p = d)."""
    params = params or sol.params
    p, d = params.p, params.d
    if math.log10(sol.r_max / sol.r_min) < 2.0 - 1e-9:
        raise PreconditionError("classification needs at least two decades of data")
    if zeta == 0.0:
        lo, hi = sol.r_min, sol.r_min * 10**decades
    elif zeta == math.inf:
        lo, hi = sol.r_max / 10**decades, sol.r_max
    else:
        raise DomainError("zeta must be 0 or infinity")
    r, v = _window(sol, lo, hi)
    vmax = float(np.max(np.abs(v)))
    if p == d:
        basis = np.log(r)
        name = "log"
        grows = True  # |log r| dominates constants at both ends
    else:
        alpha = params.fundamental_exponent
        basis = r**alpha
        name = "power"
        grows = (alpha < 0) == (zeta == 0.0)
    A = np.vstack([np.ones_like(r), basis]).T
    cs = np.max(np.abs(A), axis=0)
    coef, *_ = np.linalg.lstsq(A / cs, v, rcond=None)
    coef = coef / cs
    resid = float(np.sqrt(np.mean((A @ coef - v) ** 2)) / vmax)
    c_const, c_basis = float(coef[0]), float(coef[1])
    coeffs = {"constant": c_const, name: c_basis}
    if resid <= threshold:
        significant = {
            "const": abs(c_const) > 1e-6 * vmax,
            "basis": float(np.max(np.abs(c_basis * basis))) > 1e-6 * vmax,
        }
        order = ["basis", "const"] if grows else ["const", "basis"]
        pick = next((o for o in order if significant[o]), "const")
        if pick == "const":
            return AsymptoticsReport(zeta, "bounded-limit", 0.0, c_const, resid, (lo, hi), coeffs)
        if name == "log":
            return AsymptoticsReport(zeta, "log", 0.0, c_basis, resid, (lo, hi), coeffs)
        rest = v - c_const
        expo = params.fundamental_exponent
        if np.all(rest * np.sign(c_basis) > 0):
            expo, _, _ = _power_fit(r, np.abs(rest))
        return AsymptoticsReport(zeta, "power", expo, c_basis, resid, (lo, hi), coeffs)
    if np.all(v > 0):
        expo, const, lres = _power_fit(r, v)
        fit = const * r**expo
        pres = float(np.sqrt(np.mean((fit - v) ** 2)) / vmax)
        if pres <= threshold and abs(expo) > 1e-8:
            return AsymptoticsReport(zeta, "power", expo, const, pres, (lo, hi), {"power-free": const})
    return AsymptoticsReport(zeta, "undetermined", math.nan, math.nan, resid, (lo, hi), coeffs)


# ---------------------------------------------------------------------------
# quotients and rescalings
# ---------------------------------------------------------------------------


def dyadic_radii(r_min: float, r_max: float, zeta: float, anchor: float | None = None) -> np.ndarray:
    """Radii anchor * 2^{-k} (zeta=0) or anchor * 2^k (zeta=inf) inside [r_min, r_max]."""
    if zeta == 0.0:
        start = anchor or r_max
        k = np.arange(0, int(math.floor(math.log2(start / r_min) + 1e-9)) + 1)
        return start * 2.0 ** (-k)
    start = anchor or r_min
    k = np.arange(0, int(math.floor(math.log2(r_max / start) + 1e-9)) + 1)
    return start * 2.0**k


def eventually_monotone(seq, tail: int = 6, rel: float = 1e-12) -> bool:
    s = np.asarray(seq, dtype=float)[-tail:]
    if s.size < 3:
        return True
    diffs = np.diff(s)
    scale = rel * max(float(np.max(np.abs(s))), 1e-300)
    diffs = diffs[np.abs(diffs) > scale]
    return bool(diffs.size == 0 or np.all(diffs > 0) or np.all(diffs < 0))


def classify_limit(radii, m, M, zeta: float, slope_tol: float = 1e-3, ratio_tol: float = 1e-2,
                   decades: float = 1.0):
    """Generalized limit of a quotient from its sphere-wise extrema sampled toward zeta.

    Returns (class, value) with class in finite / zero / infinite / undetermined.
    """
    radii = np.asarray(radii, dtype=float)
    m = np.asarray(m, dtype=float)
    M = np.asarray(M, dtype=float)
    if radii.size < 3 or np.any(m <= 0) or np.any(M <= 0):
        return "undetermined", math.nan
    # samples are ordered toward zeta; use the final decade
    dist = np.abs(np.log10(radii / radii[-1]))
    sel = dist <= decades + 1e-9
    if np.count_nonzero(sel) < 3:
        sel = np.zeros_like(sel)
        sel[-3:] = True
    x = np.log(radii[sel])
    growth_sign = -1.0 if zeta == 0.0 else 1.0
    slopes = []
    for arr in (m, M):
        b = np.polyfit(x, np.log(arr[sel]), 1)[0]
        slopes.append(growth_sign * b)
    ratio_end = float(M[-1] / m[-1])
    spread = float(np.max(M[sel]) / np.min(m[sel]))
    if max(abs(s) for s in slopes) < slope_tol and spread < 1.0 + ratio_tol:
        return "finite", float(0.5 * (m[-1] + M[-1]))
    if min(slopes) > slope_tol and ratio_end < 1.0 / slope_tol:
        return "infinite", math.inf
    if max(slopes) < -slope_tol and ratio_end < 1.0 / slope_tol:
        return "zero", 0.0
    return "undetermined", math.nan


@dataclass
class QuotientProfile:
    radii: np.ndarray
    m: np.ndarray
    M: np.ndarray
    dyadic_radii: np.ndarray
    dyadic_m: np.ndarray
    dyadic_M: np.ndarray
    limit_class: str
    limit_value: float
    monotone_m: bool
    monotone_M: bool
    zeta: float


def quotient_profile(u: RadialSolution, v: RadialSolution, zeta: float = 0.0) -> QuotientProfile:
    """u/v on the common radial range (v resampled onto u's grid when needed)."""
    lo = max(u.r_min, v.r_min)
    hi = min(u.r_max, v.r_max)
    if not lo < hi:
        raise PreconditionError("solutions share no radial range")
    m = (u.grid >= lo) & (u.grid <= hi)
    r = u.grid[m]
    uu = u.v[m]
    if v.grid.shape == u.grid.shape and np.array_equal(v.grid, u.grid):
        vv = v.v[m]
    else:
        vv = np.exp(CubicSpline(np.log(v.grid), np.log(v.v))(np.log(r)))
    if np.any(uu <= 0) or np.any(vv <= 0):
        raise PreconditionError("quotient needs positive solutions")
    q = uu / vv
    dr = dyadic_radii(r[0], r[-1], zeta)
    dq = np.exp(CubicSpline(np.log(r), np.log(q))(np.log(dr)))
    cls, val = classify_limit(dr, dq, dq, zeta)
    return QuotientProfile(r, q, q.copy(), dr, dq, dq.copy(), cls, val,
                           eventually_monotone(dq), eventually_monotone(dq), zeta)


def veron_rescale(u: RadialSolution, sigma: float, alpha: float, grid=None) -> RadialSolution:
    """w_sigma(r) = u(sigma r) / sigma^alpha, on u.grid/sigma or on a given grid."""
    if not sigma > 0:
        raise DomainError("sigma must be positive")
    p, d = u.params.p, u.params.d
    fscale = sigma ** ((1.0 - alpha) * (p - 1.0) + 1.0 - d)
    if grid is None:
        return RadialSolution(u.grid / sigma, u.v / sigma**alpha, u.w * fscale, u.params, u.potential,
                              {"veron_sigma": sigma, "veron_alpha": alpha})
    grid = np.asarray(grid, dtype=float)
    src = sigma * grid
    if src.min() < u.r_min * (1 - 1e-12) or src.max() > u.r_max * (1 + 1e-12):
        raise DomainError("rescaled grid leaves the solution's domain")
    lg = np.log(u.grid)
    vals = CubicSpline(lg, u.v)(np.log(src)) / sigma**alpha
    w = CubicSpline(lg, u.w)(np.log(src)) * fscale
    return RadialSolution(grid, vals, w, u.params, u.potential, {"veron_sigma": sigma, "veron_alpha": alpha})


@dataclass
class LimitReport:
    limit_class: str  # finite | infinite | zero | undetermined
    limit_estimate: float
    radii: np.ndarray
    oscillation: np.ndarray
    relative_oscillation: np.ndarray
    values: np.ndarray


def _ring_extrema(u, radii_pairs):
    """(min, max) of u over each annulus [a, b]; u is a RadialSolution or PolarField."""
    lo_vals, hi_vals = [], []
    for a, b in radii_pairs:
        if isinstance(u, RadialSolution):
            m = (u.grid > a) & (u.grid < b)
            vals = np.concatenate([u.v[m], u(np.array([max(a, u.r_min), min(b, u.r_max)]))])
        else:
            m = (u.r >= a * (1 - 1e-12)) & (u.r <= b * (1 + 1e-12))
            vals = u.interior_values()[m]
        lo_vals.append(float(np.min(vals)))
        hi_vals.append(float(np.max(vals)))
    return np.asarray(lo_vals), np.asarray(hi_vals)


def dyadic_limit(values, tail: int = 4, rate_cap: float = 1.0 - 1e-3):
    """Limit class of a sequence sampled on dyadic radii toward the singular point.

    Geometrically shrinking increments give a finite limit (Aitken
    extrapolation; a vanishing extrapolant means the limit is zero), growing
    increments an infinite one.
    """
    x = np.asarray(values, dtype=float)
    if x.size < tail + 1:
        return "undetermined", math.nan
    top = float(np.max(np.abs(x)))
    d = np.diff(x[-(tail + 1):])
    flat = np.abs(d) <= 1e-12 * top
    if flat[-1] and flat[-2]:
        return "finite", float(x[-1])
    if np.any(d == 0) or not (np.all(d > 0) or np.all(d < 0)):
        return "undetermined", math.nan
    q = d[1:] / d[:-1]
    if np.all(q < rate_cap):
        qq = float(q[-1])
        limit = float(x[-1] + d[-1] * qq / (1.0 - qq))
        if abs(limit) <= 1e-6 * top or (d[-1] < 0 and limit <= 0):
            return "zero", 0.0
        return "finite", limit
    if np.all(q >= rate_cap) and d[-1] > 0:
        return "infinite", math.inf
    return "undetermined", math.nan


def nonneg_limit_check(u, V: Potential, zeta: float, params: Params | None = None) -> LimitReport:
    """Numerical evidence that u(x) has a (possibly infinite) limit as x -> zeta when V >= 0."""
    params = params or u.params
    radii_all = u.grid if isinstance(u, RadialSolution) else u.r
    Vs = V.radial(radii_all, params.p)
    if np.any(Vs < -1e-14 * max(1.0, float(np.max(np.abs(Vs))))):
        raise PreconditionError("nonneg_limit_check requires V >= 0 on the solution's domain")
    r_min, r_max = float(radii_all[0]), float(radii_all[-1])
    dr = dyadic_radii(r_min, r_max, zeta)
    if zeta == 0.0:
        pairs = [(r / 2, r) for r in dr if r / 2 >= r_min * (1 - 1e-12)]
        outer = np.array([b for _, b in pairs])
    else:
        pairs = [(r, 2 * r) for r in dr if 2 * r <= r_max * (1 + 1e-12)]
        outer = np.array([a for a, _ in pairs])
    lo, hi = _ring_extrema(u, pairs)
    osc = hi - lo
    mid = 0.5 * (hi + lo)
    rel = osc / mid
    cls, val = dyadic_limit(mid)
    return LimitReport(cls, val, outer, osc, rel, mid)
