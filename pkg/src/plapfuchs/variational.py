"""Energy functional, Picone Lagrangian, modified Kelvin transform, weighted capacity and flux."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.linalg import solve_banded

from .errors import DomainError, NumericError, PreconditionError
from .exponents import Params, SectorExponents, hardy_constant
from .numerics import integrate_log, phi_p, phi_p_inv, smoothstep, smoothstep_deriv, sphere_area, uniform_derivative
from .potentials import Potential, hardy
from .radial import RadialSolution


# ---------------------------------------------------------------------------
# radial test profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RadialProfile:
    """A piecewise smooth radial function with known derivative.

    ``support`` bounds the region where the profile (or, for cutoffs, its
    derivative) can be nonzero; ``breakpoints`` mark kinks of the pieces.
    """

    value: Callable
    derivative: Callable
    support: tuple[float, float]
    breakpoints: tuple[float, ...] = ()
    label: str = ""

    def __call__(self, r):
        return self.value(np.asarray(r, dtype=float))

    def rescaled(self, s: float) -> "RadialProfile":
        """r -> u(s r)."""
        f, df = self.value, self.derivative
        return RadialProfile(lambda r: f(s * r), lambda r: s * df(s * r),
                             (self.support[0] / s, self.support[1] / s),
                             tuple(b / s for b in self.breakpoints), f"{self.label}(s={s:g})")


def log_ramp(r, a: float, b: float):
    """Smooth 0 -> 1 transition as log r goes from log a to log b; returns (value, d/dr)."""
    r = np.asarray(r, dtype=float)
    la, lb = math.log(a), math.log(b)
    x = (np.log(r) - la) / (lb - la)
    return smoothstep(x), smoothstep_deriv(x) / ((lb - la) * r)


def power_cutoff(gamma: float, r_in: float, r_out: float, ramp: float = 1.0) -> RadialProfile:
    """r^gamma times a smooth plateau: rises on [r_in, r_in e^ramp], falls on [r_out e^-ramp, r_out]."""
    a1, b1 = r_in, r_in * math.exp(ramp)
    a2, b2 = r_out * math.exp(-ramp), r_out
    if not (0 < r_in and b1 <= a2):
        raise DomainError("ramps overlap; widen [r_in, r_out] or shorten the ramp")

    def chi(r):
        up, dup = log_ramp(r, a1, b1)
        dn, ddn = log_ramp(r, a2, b2)
        return up * (1 - dn), dup * (1 - dn) - up * ddn

    def val(r):
        r = np.asarray(r, dtype=float)
        return r**gamma * chi(r)[0]

    def der(r):
        r = np.asarray(r, dtype=float)
        c, dc = chi(r)
        return gamma * r ** (gamma - 1) * c + r**gamma * dc

    return RadialProfile(val, der, (r_in, r_out), (b1, a2), f"r^{gamma:g} cutoff [{r_in:g},{r_out:g}]")


def step_cutoff(a: float, b: float) -> RadialProfile:
    """theta = 1 for r <= a, 0 for r >= b, smooth in log r in between."""

    def val(r):
        return 1.0 - log_ramp(r, a, b)[0]

    def der(r):
        return -log_ramp(r, a, b)[1]

    return RadialProfile(val, der, (a, b), (), f"step[{a:g},{b:g}]")


def random_cutoffs(n: int, r_lo: float, r_hi: float, seed: int, parts: int = 3) -> list[RadialProfile]:
    """n smooth steps from 1 to 0 inside [r_lo, r_hi]: random mixtures of log ramps."""
    rng = np.random.default_rng(seed)
    la, lb = math.log(r_lo), math.log(r_hi)
    out = []
    for _ in range(n):
        ends = np.sort(rng.uniform(la, lb, size=(parts, 2)), axis=1)
        ends[:, 1] = np.maximum(ends[:, 1], ends[:, 0] + 1e-3 * (lb - la))
        weights = rng.dirichlet(np.ones(parts))
        ramps = [(math.exp(e0), math.exp(e1), float(wt)) for (e0, e1), wt in zip(ends, weights)]

        def val(r, ramps=ramps):
            return 1.0 - sum(wt * log_ramp(r, a, b)[0] for a, b, wt in ramps)

        def der(r, ramps=ramps):
            return -sum(wt * log_ramp(r, a, b)[1] for a, b, wt in ramps)

        bps = tuple(sorted(x for a, b, _ in ramps for x in (a, b)))
        lo, hi = min(a for a, _, _ in ramps), max(b for _, b, _ in ramps)
        out.append(RadialProfile(val, der, (lo, hi), bps, "random step"))
    return out


# ---------------------------------------------------------------------------
# energy
# ---------------------------------------------------------------------------


def _piece_nodes(lo: float, hi: float, per_decade: int) -> np.ndarray:
    n = max(int(math.ceil(math.log10(hi / lo) * per_decade)), 8)
    n += n % 2  # Simpson wants an odd node count
    return np.exp(np.linspace(math.log(lo), math.log(hi), n + 1))


def energy(params: Params, V: Potential, profile: RadialProfile, per_decade: int = 2048) -> float:
    """omega_{d-1} * int (|u'|^p + V |u|^p) r^{d-1} dr, composite Simpson in log r."""
    p, d = params.p, params.d
    lo, hi = profile.support
    cuts = sorted({lo, hi, *[b for b in (*profile.breakpoints, *V.breakpoints()) if lo < b < hi]})
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        r = _piece_nodes(a, b, per_decade)
        # keep nodes off the closed ends of shells
        r_eval = r.copy()
        r_eval[0] *= 1 + 1e-14
        r_eval[-1] *= 1 - 1e-14
        u = profile(r_eval)
        du = profile.derivative(r_eval)
        dens = (np.abs(du) ** p + V.radial(r_eval, p) * np.abs(u) ** p) * r_eval ** (d - 1)
        total += float(integrate.simpson(dens * r_eval, x=np.log(r_eval)))
    return sphere_area(d) * total


@dataclass
class EnergyScan:
    best_energy: float
    best_profile: RadialProfile
    table: list[tuple[float, float, float]]  # (decades, ramp, energy)


def supercritical_scan(params: Params, lam: float, decades=(1, 2, 4, 8, 16, 32, 64),
                       ramp_fractions=(0.1, 0.25, 0.45)) -> EnergyScan:
    """Energies of r^{gamma*} log-cutoffs of growing length for the Hardy potential lam.

    Ramps are a fraction of the plateau's log-length, so their gradient cost
    shrinks as the cutoff lengthens while the bulk term grows linearly.
    """
    V = hardy(lam)
    table = []
    best = (math.inf, None)
    for L in decades:
        span = L * math.log(10.0)
        for frac in ramp_fractions:
            w = frac * span
            prof = power_cutoff(params.gamma_star, 1.0, 10.0**L, w)
            e = energy(params, V, prof, per_decade=max(64, int(4096 / L)))
            table.append((float(L), float(w), e))
            if e < best[0]:
                best = (e, prof)
    return EnergyScan(best[0], best[1], table)


# ---------------------------------------------------------------------------
# Picone Lagrangian
# ---------------------------------------------------------------------------


def picone_lagrangian(p: float, u_k, grad_u_k, u, grad_u) -> np.ndarray:
    """Pointwise L(u_k, u); gradients carry their components on the last axis."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise PreconditionError("Picone Lagrangian needs a positive reference solution")
    u_k = np.asarray(u_k, dtype=float)
    gk = np.asarray(grad_u_k, dtype=float)
    g = np.asarray(grad_u, dtype=float)
    nk = np.sqrt(np.sum(gk * gk, axis=-1))
    n = np.sqrt(np.sum(g * g, axis=-1))
    q = np.abs(u_k) / u
    # |grad u|^{p-2} (grad u_k . grad u), read as 0 where grad u = 0 (also for p < 2)
    dot = np.sum(gk * g, axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        cross = np.where(n > 0, dot * n ** (p - 2), 0.0)
    return (nk**p + (p - 1) * q**p * n**p - p * q ** (p - 1) * cross) / p


@dataclass(frozen=True)
class PolarProfile:
    """f(r, theta) -> (value, d/dr, (1/r) d/dtheta), vectorized over broadcast arrays."""

    evaluate: Callable
    label: str = ""

    def times_radial(self, chi: RadialProfile) -> "PolarProfile":
        def ev(r, th):
            v, gr, gt = self.evaluate(r, th)
            c, dc = chi(r), chi.derivative(r)
            return c * v, c * gr + dc * v, c * gt

        return PolarProfile(ev, f"{chi.label} * {self.label}")


def separable_profile(exps: SectorExponents, which: str = "singular") -> PolarProfile:
    """r^beta phi(theta) from a sector exponent computation."""
    beta = exps._pick(which)[0]

    def ev(r, th):
        ph = exps.profile(which, th)
        dph = exps.profile_derivative(which, th)
        rb = r**beta
        return rb * ph, beta * rb / r * ph, rb / r * dph

    return PolarProfile(ev, f"r^{beta:.6g} phi")


def cone_cutoff(k: float) -> RadialProfile:
    """chi_k: 0 below 1/2, 1 on [1, k], 0 beyond 2k, smooth ramps in log r."""
    if k <= 1:
        raise DomainError("cone cutoff needs k > 1")

    def val(r):
        return log_ramp(r, 0.5, 1.0)[0] * (1.0 - log_ramp(r, k, 2 * k)[0])

    def der(r):
        a, da = log_ramp(r, 0.5, 1.0)
        b, db = log_ramp(r, k, 2 * k)
        return da * (1 - b) - a * db

    return RadialProfile(val, der, (0.5, 2 * k), (1.0, float(k)), f"chi_{k:g}")


@dataclass
class PiconeResult:
    r: np.ndarray
    theta: np.ndarray
    field: np.ndarray
    integral: float
    min_value: float


def picone_integral(p: float, test: PolarProfile, pos: PolarProfile, r_lo: float, r_hi: float,
                    theta_max: float, n_r: int = 1025, n_theta: int = 513, breakpoints=()) -> PiconeResult:
    """Field of L(test, pos) on a polar grid and its integral over r_lo < r < r_hi, 0 < theta < theta_max.

    The radial range is split at ``breakpoints``; each piece gets n_r Simpson
    nodes in log r.
    """
    cuts = sorted({r_lo, r_hi, *[b for b in breakpoints if r_lo < b < r_hi]})
    th = np.linspace(0.0, theta_max, n_theta)
    interior = th[1:-1]
    total = 0.0
    fields, radii = [], []
    mins = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        r = np.exp(np.linspace(math.log(a), math.log(b), n_r))
        R, T = np.meshgrid(r, interior, indexing="ij")
        uk, gkr, gkt = test.evaluate(R, T)
        u, gr, gt = pos.evaluate(R, T)
        L = picone_lagrangian(p, uk, np.stack([gkr, gkt], -1), u, np.stack([gr, gt], -1))
        mins.append(float(np.min(L)))
        # integrand vanishes on the rays (u_k, u both vanish there)
        full = np.zeros((r.size, th.size))
        full[:, 1:-1] = L
        ang = integrate.simpson(full, x=th, axis=1)
        total += float(integrate.simpson(ang * r * r, x=np.log(r)))
        fields.append(full)
        radii.append(r)
    return PiconeResult(np.concatenate(radii), th, np.concatenate(fields), total, min(mins))


# ---------------------------------------------------------------------------
# Kelvin transform and weighted operator
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightedOperatorSpec:
    """div(|x|^beta |grad v|^{p-2} grad v) in dimension d."""

    beta: float
    params: Params

    @classmethod
    def kelvin(cls, params: Params) -> "WeightedOperatorSpec":
        return cls(2.0 * (params.p - params.d), params)

    @property
    def alpha(self) -> float:
        p, d = self.params.p, self.params.d
        return (p - d - self.beta) / (p - 1.0)


def kelvin_transform(u):
    """K[u](x) = u(x / |x|^2) for a RadialSolution or a PolarField."""
    if isinstance(u, RadialSolution):
        p, d = u.params.p, u.params.d
        r = 1.0 / u.grid[::-1]
        v = u.v[::-1].copy()
        w = -(r ** (2.0 * (d - p))) * u.w[::-1]
        info = dict(u.info)
        info["kelvin"] = not info.get("kelvin", False)
        return RadialSolution(r, v, w, u.params, u.potential, info)
    from .polar2d import PolarField

    if isinstance(u, PolarField):
        return u.inverted()
    raise TypeError("kelvin_transform expects a RadialSolution or PolarField")


def _values_and_grid(v):
    if isinstance(v, RadialSolution):
        return v.grid, v.v
    if isinstance(v, RadialProfile):
        raise TypeError("sample the profile on a grid first")
    grid, vals = v
    return np.asarray(grid, dtype=float), np.asarray(vals, dtype=float)


def weighted_flux(v, spec: WeightedOperatorSpec):
    """(r, r^{beta+d-1} Phi_p(v')) with v' from 8th-order differences in log r."""
    grid, vals = _values_and_grid(v)
    t = np.log(grid)
    h = (t[-1] - t[0]) / (t.size - 1)
    if np.max(np.abs(np.diff(t) - h)) > 1e-9 * max(1.0, abs(h)):
        raise PreconditionError("weighted_residual needs a log-uniform grid")
    p, d = spec.params.p, spec.params.d
    dv = uniform_derivative(vals, h) / grid
    return grid, grid ** (spec.beta + d - 1) * phi_p(dv, p), h


def weighted_residual(v, spec: WeightedOperatorSpec) -> float:
    """Max over interior nodes of |(r^{beta+d-1} Phi_p(v'))'| relative to the local flux scale.

    Both derivatives use 8th-order stencils; four nodes at each end are
    skipped, so the first stencil never reaches the boundary.
    """
    grid, F, h = weighted_flux(v, spec)
    if grid.size < 17:
        raise PreconditionError("weighted_residual needs at least 17 nodes")
    scale = np.max(np.abs(F[4:-4]))
    if scale == 0.0:
        return 0.0
    dF = uniform_derivative(F, h)  # d/dt = r d/dr
    core = slice(8, -8)
    # |dF/dr| / (|F|/r) = |dF/dt| / |F|
    local = np.maximum(np.abs(F[core]), 1e-300)
    return float(np.max(np.abs(dF[core]) / local))


# ---------------------------------------------------------------------------
# weighted capacity
# ---------------------------------------------------------------------------


@dataclass
class CapacityResult:
    closed_form: float
    numerical: float
    alpha: float
    relative_gap: float
    iterations: int = 0
    info: dict = field(default_factory=dict)


def capacity_closed_form(params: Params, beta: float, r: float, R: float) -> float:
    p, d = params.p, params.d
    alpha = (p - d - beta) / (p - 1.0)
    if alpha == 0.0:
        raise DomainError("alpha = 0 (logarithmic capacity) is not covered")
    return sphere_area(d) * abs(alpha) ** (p - 1.0) * abs(r**alpha - R**alpha) ** (1.0 - p)


def _cell_weights(t: np.ndarray, m: float) -> np.ndarray:
    """int_{t_i}^{t_{i+1}} s^m ds / (t_{i+1}-t_i)^p handled by caller; here only the integral."""
    if abs(m + 1.0) < 1e-14:
        return np.log(t[1:] / t[:-1])
    return (t[1:] ** (m + 1) - t[:-1] ** (m + 1)) / (m + 1)


def capacity_minimize(params: Params, beta: float, r: float, R: float, n: int = 16384,
                      tol: float = 1e-13, max_iter: int = 200, init: str = "power"):
    """Minimize omega int_r^R t^{beta+d-1} |theta'|^p dt over P1 profiles, theta(r)=1, theta(R)=0.

    Damped Newton on the (convex) discrete problem, started from the profile
    that is affine in t^alpha (``init="power"``) or in t (``init="linear"``).
    Returns (energy, nodes, profile, iterations).
    """
    p, d = params.p, params.d
    alpha = (p - d - beta) / (p - 1.0)
    t = np.exp(np.linspace(math.log(r), math.log(R), n + 1))
    t[0], t[-1] = r, R
    c = _cell_weights(t, beta + d - 1.0) / np.diff(t) ** p
    if init == "linear":
        th = (R - t) / (R - r)
    elif alpha != 0.0:
        th = (t**alpha - R**alpha) / (r**alpha - R**alpha)
    else:
        th = np.log(R / t) / math.log(R / r)
    th[0], th[-1] = 1.0, 0.0

    def E(x):
        return float(np.sum(c * np.abs(np.diff(x)) ** p))

    e = E(th)
    it = 0
    for it in range(1, max_iter + 1):
        D = np.diff(th)
        g_cell = p * c * phi_p(D, p)
        grad = g_cell[:-1] - g_cell[1:]  # dE/dtheta_i for interior i
        h_cell = p * (p - 1) * c * np.abs(D) ** (p - 2)
        m = n - 1
        ab = np.zeros((3, m))
        ab[1] = h_cell[:-1] + h_cell[1:]
        ab[0, 1:] = -h_cell[1:-1]
        ab[2, :-1] = -h_cell[1:-1]
        try:
            step = solve_banded((1, 1), ab, -grad)
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericError("capacity Newton: singular Hessian", iteration=it) from exc
        dec = float(-grad @ step)
        if dec <= tol * e:
            break
        lam = 1.0
        while True:
            cand = th.copy()
            cand[1:-1] += lam * step
            ec = E(cand)
            if ec <= e - 1e-4 * lam * dec or lam < 1e-10:
                break
            lam *= 0.5
        th, e = cand, ec
    else:
        raise NumericError("capacity Newton did not converge", iterations=it)
    return sphere_area(d) * e, t, th, it


def weighted_capacity(params: Params, beta: float, r: float, R: float, n: int = 16384) -> CapacityResult:
    if not (0 < r < R):
        raise DomainError("need 0 < r < R")
    closed = capacity_closed_form(params, beta, r, R)
    num, _, _, it = capacity_minimize(params, beta, r, R, n=n)
    alpha = (params.p - params.d - beta) / (params.p - 1.0)
    return CapacityResult(closed, num, alpha, abs(num - closed) / closed, it, {"n": n})


# ---------------------------------------------------------------------------
# flux constant
# ---------------------------------------------------------------------------


@dataclass
class FluxReport:
    values: list[float]
    spread: float  # max pairwise deviation relative to max |k|
    exact: float | None = None


def flux_constant(v, cutoffs, spec: WeightedOperatorSpec) -> FluxReport:
    """k = int grad(theta) . A[v] dx for each cutoff theta (radial v and theta).

    ``v`` is a RadialProfile (exact derivative) or RadialSolution (derivative
    from the stored flux). In polar form k = -omega int theta'(t) t^{beta+d-1} Phi_p(v'(t)) dt,
    sign chosen so that k > 0 for decreasing v.
    """
    p, d = spec.params.p, spec.params.d
    if isinstance(v, RadialSolution):
        from scipy.interpolate import CubicSpline

        spl = CubicSpline(np.log(v.grid), v.slope())

        def dv(r):
            return spl(np.log(r))

        lo_ok, hi_ok = v.r_min, v.r_max
    else:
        dv = v.derivative
        lo_ok, hi_ok = v.support
    vals = []
    for th in cutoffs:
        a, b = th.support
        if a < lo_ok * (1 - 1e-12) or b > hi_ok * (1 + 1e-12):
            raise DomainError("cutoff transition leaves the profile's range")

        def integrand(r, th=th):
            return th.derivative(r) * r ** (spec.beta + d - 1) * phi_p(dv(r), p)

        vals.append(sphere_area(d) * integrate_log(integrand, a, b, breakpoints=th.breakpoints, nodes=64,
                                                   pieces_per_decade=8))
    vals = [float(x) for x in vals]
    top = max(abs(x) for x in vals) if vals else 0.0
    spread = 0.0 if top == 0 else (max(vals) - min(vals)) / top
    return FluxReport(vals, spread)


def power_profile(alpha: float, r_lo: float, r_hi: float) -> RadialProfile:
    return RadialProfile(lambda r: np.asarray(r, dtype=float) ** alpha,
                         lambda r: alpha * np.asarray(r, dtype=float) ** (alpha - 1.0),
                         (r_lo, r_hi), (), f"r^{alpha:g}")


def power_flux_exact(spec: WeightedOperatorSpec) -> float:
    """Flux constant of r^alpha: -omega Phi_p(alpha)."""
    return -sphere_area(spec.params.d) * float(phi_p(spec.alpha, spec.params.p))
