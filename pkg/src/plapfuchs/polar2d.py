"""Planar solver for -Delta_p u + V |u|^{p-2} u = 0 on annuli and sectors.

With s = log r the equation multiplied by r^2 reads

    -d_s(a u_s) - d_theta(a u_theta) + e^{2s} V Phi_p(u) = 0,
    a = (e^{-2s}(u_s^2 + u_theta^2))^{(p-2)/2}.

It is discretized in flux form on a uniform (s, theta) grid. Each face flux
uses the normal difference across the face and the tangential central
difference averaged over the two adjacent nodes. The Jacobian is exact: it is
assembled by complex-step differentiation with a distance-3 colouring of the
nodes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy import ndimage, sparse
from scipy.sparse.linalg import spsolve

from .errors import DomainError, NumericError, PreconditionError
from .exponents import Params, SectorExponents
from .potentials import Potential
from .radial import RadialSolution, classify_limit, dyadic_radii, eventually_monotone, quotient_profile

DEFAULT_PER_DECADE_2D = 128
DEFAULT_N_THETA = 128
CRIT_REL = 1e-6
EPS_STAGES = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)
_CSTEP = 1e-30


@dataclass(frozen=True)
class PolarDomain:
    """Annulus r_lo < r < r_hi; a sector 0 < theta < aperture when aperture is set."""

    r_lo: float
    r_hi: float
    aperture: float | None = None

    def __post_init__(self):
        if not (0 < self.r_lo < self.r_hi):
            raise DomainError("need 0 < r_lo < r_hi")
        if self.aperture is not None and not (0 < self.aperture < 2 * math.pi + 1e-15):
            raise DomainError("sector aperture must lie in (0, 2 pi)")

    @property
    def periodic(self) -> bool:
        return self.aperture is None

    @property
    def decades(self) -> float:
        return math.log10(self.r_hi / self.r_lo)


@dataclass(frozen=True)
class PolarField:
    r: np.ndarray  # radial nodes including both circles
    theta: np.ndarray  # periodic nodes, or sector nodes including both rays
    u: np.ndarray  # shape (len(r), len(theta))
    grad: np.ndarray
    mask: np.ndarray
    domain: PolarDomain
    params: Params
    potential: Potential | None = None
    info: dict = field(default_factory=dict, compare=False)

    def interior_values(self) -> np.ndarray:
        """Values off the sector rays (all columns for a periodic annulus)."""
        return self.u if self.domain.periodic else self.u[:, 1:-1]

    def inverted(self) -> "PolarField":
        """Kelvin transform x -> x/|x|^2: radial axis reversed, gradients scaled by |x|^{-2}."""
        r_new = 1.0 / self.r[::-1]
        u = self.u[::-1].copy()
        grad = self.grad[::-1] * (1.0 / r_new[:, None] ** 2)
        dom = PolarDomain(1.0 / self.domain.r_hi, 1.0 / self.domain.r_lo, self.domain.aperture)
        info = dict(self.info)
        info["kelvin"] = not info.get("kelvin", False)
        return PolarField(r_new, self.theta.copy(), u, grad, self.mask[::-1].copy(), dom, self.params,
                          self.potential, info)

    def to_rows(self):
        """(r, theta, u) triples in row-major order."""
        R, T = np.meshgrid(self.r, self.theta, indexing="ij")
        return np.column_stack([R.ravel(), T.ravel(), self.u.ravel()])


def polar_grid(domain: PolarDomain, n_r: int | None = None, n_theta: int | None = None):
    """Radial nodes (log-uniform) and angular nodes."""
    if n_r is None:
        n_r = max(int(math.ceil(domain.decades * DEFAULT_PER_DECADE_2D)), 8)
    n_theta = n_theta or DEFAULT_N_THETA
    s = np.linspace(math.log(domain.r_lo), math.log(domain.r_hi), n_r + 1)
    r = np.exp(s)
    r[0], r[-1] = domain.r_lo, domain.r_hi
    if domain.periodic:
        theta = 2 * math.pi * np.arange(n_theta) / n_theta
    else:
        theta = np.linspace(0.0, domain.aperture, n_theta + 1)
    return s, r, theta


def circle_scale(u: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Gradient scale max_theta |u|/r on each circle, shape (len(r), 1).

    Fields such as r^beta phi(theta) span many orders of magnitude across the
    annulus, so a single global scale would flag whole circles as critical.
    """
    sc = np.max(np.abs(u), axis=1) / r
    return np.where(sc > 0, sc, 1.0)[:, None]


def gradient_magnitude(u: np.ndarray, s: np.ndarray, theta: np.ndarray, periodic: bool) -> np.ndarray:
    hs = s[1] - s[0]
    us = np.gradient(u, hs, axis=0, edge_order=2)
    if periodic:
        ht = theta[1] - theta[0]
        ut = (np.roll(u, -1, axis=1) - np.roll(u, 1, axis=1)) / (2 * ht)
    else:
        ut = np.gradient(u, theta, axis=1, edge_order=2)
    return np.exp(-s)[:, None] * np.sqrt(us * us + ut * ut)


class _Discretization:
    """Residual of the flux-form scheme; works for real or complex arrays."""

    def __init__(self, params: Params, V: Potential, domain: PolarDomain, s, theta):
        if params.d != 2:
            raise DomainError("the planar solver needs d = 2")
        self.p = params.p
        self.s = s
        self.theta = theta
        self.periodic = domain.periodic
        self.hs = s[1] - s[0]
        self.ht = theta[1] - theta[0]
        self.N = s.size - 1
        self.J = theta.size if self.periodic else theta.size - 2
        r = np.exp(s)
        cols = theta if self.periodic else theta[1:-1]
        vr = V.radial(r[1:-1], self.p)
        ang = V.angular_factor(cols) if V.angular is not None else np.ones_like(cols)
        self.src = (np.exp(2 * s[1:-1]) * vr)[:, None] * ang[None, :]
        self.e2_face_s = np.exp(-2 * 0.5 * (s[1:] + s[:-1]))[:, None]
        self.e2_node = np.exp(-2 * s[1:-1])[:, None]
        self.shape = (self.N - 1, self.J)
        self.cols = slice(0, self.J) if self.periodic else slice(1, self.J + 1)  # unknown columns of U

    def pad(self, U):
        """Ghost columns: periodic wrap, or the (zero) ray values for sectors."""
        if self.periodic:
            return np.concatenate([U[:, -1:], U, U[:, :1]], axis=1)
        return U

    def residual(self, U, eps: float):
        """U: full array including boundary rows (and ray columns for sectors)."""
        p, hs, ht = self.p, self.hs, self.ht
        Up = self.pad(U)
        c = slice(1, self.J + 1)
        # faces between radial rows i and i+1 (all rows), real columns
        us = (Up[1:, c] - Up[:-1, c]) / hs
        ut = (Up[:-1, 2:] - Up[:-1, :-2] + Up[1:, 2:] - Up[1:, :-2]) / (4 * ht)
        ub = 0.5 * (Up[1:, c] + Up[:-1, c])
        q = self.e2_face_s * (us * us + ut * ut + eps * eps * ub * ub)
        F = q ** ((p - 2) / 2) * us if p != 2 else us
        # faces between columns k and k+1 (k = 0..J), interior rows
        inner = Up[1:-1]
        ut2 = (inner[:, 1:] - inner[:, :-1]) / ht
        us2 = (Up[2:, :-1] - Up[:-2, :-1] + Up[2:, 1:] - Up[:-2, 1:]) / (4 * hs)
        ub2 = 0.5 * (inner[:, 1:] + inner[:, :-1])
        q2 = self.e2_node * (us2 * us2 + ut2 * ut2 + eps * eps * ub2 * ub2)
        G = q2 ** ((p - 2) / 2) * ut2 if p != 2 else ut2
        node = Up[1:-1, c]
        R = -(F[1:] - F[:-1]) / hs - (G[:, 1:] - G[:, :-1]) / ht + self.src * node ** (p - 1)
        scale = (float(np.max(np.abs(F.real))) / hs + float(np.max(np.abs(G.real))) / ht
                 + float(np.max(np.abs((self.src * node ** (p - 1)).real))))
        return R, scale

    def colours(self):
        n_i, n_j = self.shape
        ci = np.arange(n_i) % 3
        if self.periodic:
            base = n_j - n_j % 3
            cj = np.where(np.arange(n_j) < base, np.arange(n_j) % 3, 3 + np.arange(n_j) - base)
        else:
            cj = np.arange(n_j) % 3
        n_cj = int(cj.max()) + 1
        return ci[:, None] * n_cj + cj[None, :], 3 * n_cj

    def jacobian(self, U, eps: float):
        n_i, n_j = self.shape
        colour, n_col = self.colours()
        idx = np.arange(n_i * n_j).reshape(n_i, n_j)
        rows, cols, vals = [], [], []
        c = self.cols
        for k in range(n_col):
            sel = colour == k
            if not sel.any():
                continue
            Uc = U.astype(complex)
            inner = Uc[1:-1, c]
            inner[sel] += 1j * _CSTEP
            Uc[1:-1, c] = inner
            R, _ = self.residual(Uc, eps)
            D = R.imag / _CSTEP
            ii, jj = np.nonzero(sel)
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    ri = ii + di
                    rj = jj + dj
                    if self.periodic:
                        rj = rj % n_j
                        ok = (ri >= 0) & (ri < n_i)
                    else:
                        ok = (ri >= 0) & (ri < n_i) & (rj >= 0) & (rj < n_j)
                    rows.append(idx[ri[ok], rj[ok]])
                    cols.append(idx[ii[ok], jj[ok]])
                    vals.append(D[ri[ok], rj[ok]])
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        vals = np.concatenate(vals)
        keep = vals != 0
        n = n_i * n_j
        return sparse.csc_matrix((vals[keep], (rows[keep], cols[keep])), shape=(n, n))


def _boundary_values(data, theta) -> np.ndarray:
    if callable(data):
        return np.asarray(data(theta), dtype=float) * np.ones_like(theta)
    return np.full_like(theta, float(data))


def solve_dirichlet_2d(params: Params, V: Potential, domain: PolarDomain, inner, outer,
                       n_r: int | None = None, n_theta: int | None = None, tol: float = 1e-9,
                       eps_stages=EPS_STAGES, max_iter: int = 40, initial: np.ndarray | None = None) -> PolarField:
    """Positive solution with u = inner(theta) on r_lo, outer(theta) on r_hi (zero on sector rays).

    For p = 2 the problem is linear and sign-changing data are accepted.

    ``inner``/``outer`` are callables of theta or constants. The regularized
    flux replaces |grad u|^2 by |grad u|^2 + eps^2 (u/r)^2, eps running through
    ``eps_stages``; the final stage is solved to ``tol`` in the scaled max norm.
    """
    s, r, theta = polar_grid(domain, n_r, n_theta)
    disc = _Discretization(params, V, domain, s, theta)
    g_in = _boundary_values(inner, theta)
    g_out = _boundary_values(outer, theta)
    if not domain.periodic:
        g_in[[0, -1]] = 0.0
        g_out[[0, -1]] = 0.0
    inside = g_in if domain.periodic else g_in[1:-1]
    inside_o = g_out if domain.periodic else g_out[1:-1]
    linear = params.p == 2.0
    if not linear and (np.any(inside <= 0) or np.any(inside_o <= 0)):
        raise PreconditionError("boundary data must be positive on the circles")
    if initial is None:
        tau = ((s - s[0]) / (s[-1] - s[0]))[:, None]
        if linear:
            U = (1 - tau) * g_in + tau * g_out
        else:
            U = np.where((g_in > 0) & (g_out > 0), np.abs(g_in) ** (1 - tau) * np.abs(g_out) ** tau, 0.0)
    else:
        U = np.array(initial, dtype=float)
    U[0], U[-1] = g_in, g_out
    if not domain.periodic:
        U[:, 0] = U[:, -1] = 0.0
    c = slice(1, disc.J + 1) if not domain.periodic else slice(0, disc.J)
    stages = [0.0] if params.p == 2.0 else list(eps_stages)
    history = []
    rn = math.inf
    for eps in stages:
        final = eps == stages[-1]
        stage_tol = tol if final else max(tol, 1e-6)
        stalls = 0
        R, scale = disc.residual(U, eps)
        rn = float(np.max(np.abs(R))) / scale
        for it in range(max_iter):
            history.append((eps, it, rn))
            if rn < stage_tol:
                break
            Jm = disc.jacobian(U, eps)
            step = spsolve(Jm, -R.ravel()).reshape(disc.shape)
            if not np.all(np.isfinite(step)):
                raise NumericError("singular Jacobian in planar Newton", history=history, residual=rn)
            lam = 1.0
            base = U[1:-1, c]
            while True:
                trial_inner = base + lam * step
                if not linear:
                    trial_inner = np.maximum(trial_inner, 1e-3 * base)  # projection onto u > 0
                trial = U.copy()
                trial[1:-1, c] = trial_inner
                Rt, st = disc.residual(trial, eps)
                rt = float(np.max(np.abs(Rt))) / st
                if rt < (1 - 1e-4 * lam) * rn or lam < 1e-4:
                    break
                lam *= 0.5
            stalls = stalls + 1 if rt >= rn else 0
            if stalls >= 5:
                raise NumericError("planar Newton stagnated", history=history, residual=rn, eps=eps)
            U, R, scale, rn = trial, Rt, st, rt
        else:
            if final:
                raise NumericError("planar Newton did not converge", history=history, residual=rn)
            history.append((eps, max_iter, rn))
    history.append((stages[-1], -1, rn))
    grad = gradient_magnitude(U, s, theta, domain.periodic)
    mask = grad < CRIT_REL * circle_scale(U, r)
    return PolarField(r, theta, U, grad, mask, domain, params, V,
                      {"residual": rn, "eps_min": stages[-1], "newton": history, "n_r": s.size - 1,
                       "n_theta": int(theta.size if domain.periodic else theta.size - 1)})


def field_residual(field_: PolarField, V: Potential | None = None, eps: float = 0.0) -> float:
    """Scaled max-norm residual of the discrete operator applied to the field's values."""
    V = V if V is not None else (field_.potential or Potential())
    s = np.log(field_.r)
    disc = _Discretization(field_.params, V, field_.domain, s, field_.theta)
    R, scale = disc.residual(field_.u, eps)
    return float(np.max(np.abs(R))) / scale


def sample_field(domain: PolarDomain, params: Params, fn: Callable, n_r=None, n_theta=None,
                 V: Potential | None = None) -> PolarField:
    """PolarField holding fn(r, theta) sampled on the solver's grid."""
    s, r, theta = polar_grid(domain, n_r, n_theta)
    R, T = np.meshgrid(r, theta, indexing="ij")
    U = np.asarray(fn(R, T), dtype=float)
    if not domain.periodic:
        U[:, 0] = U[:, -1] = 0.0
    grad = gradient_magnitude(U, s, theta, domain.periodic)
    return PolarField(r, theta, U, grad, grad < CRIT_REL * circle_scale(U, r), domain, params, V,
                      {"sampled": True})


# ---------------------------------------------------------------------------
# quotient diagnostics
# ---------------------------------------------------------------------------


@dataclass
class HarnackReport:
    radii: np.ndarray  # all grid radii
    m: np.ndarray
    M: np.ndarray
    ratio: np.ndarray
    uniform_bound: float
    dyadic_radii: np.ndarray
    dyadic_m: np.ndarray
    dyadic_M: np.ndarray
    dyadic_ratio: np.ndarray
    monotone_m: bool
    monotone_M: bool
    limit_class: str
    limit_value: float
    zeta: float


def _dyadic_rows(r: np.ndarray, zeta: float) -> np.ndarray:
    """Row indices nearest to the dyadic radii running toward zeta."""
    targets = dyadic_radii(r[0], r[-1], zeta)
    lr = np.log(r)
    idx = [int(np.argmin(np.abs(lr - math.log(t)))) for t in targets]
    out = []
    for i in idx:
        if not out or out[-1] != i:
            out.append(i)
    return np.array(out, dtype=int)


def _limit_from_extrema(radii, m, M, zeta: float, ratio_tol: float = 1e-2):
    """Limit class of u/v from dyadic sphere-wise extrema.

    A finite limit needs M/m within 1 + ratio_tol over the last probed decade
    and still shrinking; otherwise the trends of m and M decide between zero,
    infinite and undetermined.
    """
    radii, m, M = (np.asarray(x, dtype=float) for x in (radii, m, M))
    ratios = (M / m)[np.abs(np.log10(radii / radii[-1])) <= 1.0 + 1e-9]
    shrinking = bool(np.all(np.diff(ratios) <= 1e-12 * ratios[:-1])) if ratios.size > 1 else False
    tight = bool(np.all(ratios <= 1.0 + ratio_tol))
    evidence = {"last_decade_ratios": ratios.tolist(), "shrinking": shrinking, "within_tolerance": tight}
    if tight and shrinking:
        return "finite", float(0.5 * (m[-1] + M[-1])), evidence
    cls, val = classify_limit(radii, m, M, zeta)
    if cls == "finite":
        cls, val = "undetermined", math.nan  # the ratio test above is the finite-limit criterion
    return cls, val, evidence


def harnack_profile(u: PolarField, v: PolarField, zeta: float = 0.0) -> HarnackReport:
    """Sphere-wise extrema of u/v and their behaviour along dyadic radii toward zeta."""
    if u.u.shape != v.u.shape or not np.allclose(u.r, v.r, rtol=1e-13, atol=0):
        raise PreconditionError("harnack_profile needs fields on the same grid")
    uu, vv = u.interior_values(), v.interior_values()
    if np.any(vv <= 0) or np.any(uu <= 0):
        raise PreconditionError("harnack_profile needs positive fields off the rays")
    q = uu / vv
    m = q.min(axis=1)
    M = q.max(axis=1)
    ratio = M / m
    rows = _dyadic_rows(u.r, zeta)
    dm, dM = m[rows], M[rows]
    cls, val, _ = _limit_from_extrema(u.r[rows], dm, dM, zeta)
    return HarnackReport(u.r, m, M, ratio, float(ratio.max()), u.r[rows], dm, dM, dM / dm,
                         eventually_monotone(dm), eventually_monotone(dM), cls, val, zeta)


@dataclass
class ProbeReport:
    limit_class: str  # finite | zero | infinite | undetermined
    limit_value: float
    evidence: dict
    profile: object  # HarnackReport or QuotientProfile
    status: str = "evidence"


def regular_point_probe(u, v, zeta: float = 0.0, ratio_tol: float = 1e-2) -> ProbeReport:
    """Does u/v have a limit (possibly 0 or infinity) at zeta?"""
    if isinstance(u, RadialSolution) and isinstance(v, RadialSolution):
        qp = quotient_profile(u, v, zeta)
        return ProbeReport(qp.limit_class, qp.limit_value, {"radial": True}, qp)
    rep = harnack_profile(u, v, zeta)
    cls, val, evidence = _limit_from_extrema(rep.dyadic_radii, rep.dyadic_m, rep.dyadic_M, zeta, ratio_tol)
    evidence["uniform_bound"] = rep.uniform_bound
    return ProbeReport(cls, val, evidence, rep)


# ---------------------------------------------------------------------------
# separable solutions and critical sets
# ---------------------------------------------------------------------------


@dataclass
class SectorCheck:
    ansatz_residual: dict  # which -> scaled discrete residual of r^beta phi
    solve_gap: dict  # which -> max |u_2d - ansatz| / max |ansatz|
    fitted_beta: dict  # which -> exponent fitted from the 2-D solution
    beta_gap: dict  # which -> |fitted - shooting| / |shooting|
    fields: dict = field(default_factory=dict, repr=False)


def _fit_beta(fld: PolarField) -> float:
    """Least-squares slope of log u against log r over all interior nodes (angle-wise intercepts)."""
    U = fld.interior_values()
    logs = np.log(fld.r)
    core = slice(1, -1)
    y = np.log(U[core])  # (n_r-2, n_theta_int)
    x = logs[core]
    xc = x - x.mean()
    yc = y - y.mean(axis=0, keepdims=True)
    return float(np.sum(xc[:, None] * yc) / (np.sum(xc * xc) * y.shape[1]))


def sector_separable_check(exps: SectorExponents, domain: PolarDomain, which=("regular", "singular"),
                           n_r: int | None = None, n_theta: int | None = None, solve: bool = True) -> SectorCheck:
    if domain.periodic or abs(domain.aperture - exps.aperture) > 1e-12:
        raise PreconditionError("sector domain must match the exponents' aperture")
    params = Params(exps.p, 2)
    V = Potential()
    res, gap, fit, bgap, fields = {}, {}, {}, {}, {}
    for w in which:
        beta = exps._pick(w)[0]

        def fn(R, T, beta=beta, w=w):
            return R**beta * exps.profile(w, T)

        ans = sample_field(domain, params, fn, n_r, n_theta, V)
        res[w] = field_residual(ans, V)
        if solve:
            th = ans.theta
            sol = solve_dirichlet_2d(params, V, domain, lambda t, b=beta, w=w: domain.r_lo**b * exps.profile(w, t),
                                     lambda t, b=beta, w=w: domain.r_hi**b * exps.profile(w, t), n_r, n_theta)
            gap[w] = float(np.max(np.abs(sol.u - ans.u)) / np.max(np.abs(ans.u)))
            fit[w] = _fit_beta(sol)
            bgap[w] = abs(fit[w] - beta) / abs(beta)
            fields[w] = sol
        fields[f"{w}-ansatz"] = ans
    return SectorCheck(res, gap, fit, bgap, fields)


@dataclass
class CriticalSetReport:
    delta: np.ndarray  # threshold on each circle
    mask: np.ndarray
    n_critical: int
    components: int  # connected components of the complement
    touches_boundary: bool
    complement_connected: bool


def critical_set_diagnostics(u: PolarField, rel: float = 1e-6) -> CriticalSetReport:
    """Nodes with |grad u| below rel * max(|u|/r) on their circle, and the connectivity of the complement."""
    delta = rel * circle_scale(u.u, u.r)
    mask = u.grad < delta
    free = ~mask
    labels, n = ndimage.label(free)
    if u.domain.periodic and n > 1:
        # glue labels across theta = 0 / 2 pi
        left, right = labels[:, 0], labels[:, -1]
        pairs = {(a, b) for a, b in zip(left, right) if a and b and a != b}
        parent = list(range(n + 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in pairs:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        n = len({find(x) for x in range(1, n + 1)})
    border = np.zeros_like(mask)
    border[0, :] = border[-1, :] = True
    if not u.domain.periodic:
        border[:, 0] = border[:, -1] = True
    return CriticalSetReport(delta.ravel(), mask, int(mask.sum()), int(n), bool(np.any(mask & border)), n <= 1)


# ---------------------------------------------------------------------------
# Hardy scenario used by the Harnack diagnostics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HarnackScenario:
    p: float = 3.0
    lam_fraction: float = 0.5
    r_lo: float = 1e-4
    r_hi: float = 10.0
    perturb_u: tuple[tuple[int, float], ...] = ((1, 0.3), (2, 0.2))
    perturb_v: tuple[tuple[int, float], ...] = ((1, -0.25), (3, 0.3))
    inner_factor_v: float = 1.3
    n_theta: int = 64
    per_decade: int = DEFAULT_PER_DECADE_2D


def harnack_pair(sc: HarnackScenario = HarnackScenario()):
    """Two solutions of the planar Hardy equation with different angular data on the outer circle."""
    from .exponents import hardy_constant, solve_gamma
    from .potentials import hardy

    params = Params(sc.p, 2)
    lam = sc.lam_fraction * hardy_constant(params)
    gp = solve_gamma(lam, params).gamma_plus
    V = hardy(lam)
    dom = PolarDomain(sc.r_lo, sc.r_hi)
    n_r = int(math.ceil(dom.decades * sc.per_decade))

    def outer(modes):
        return lambda t: sc.r_hi**gp * (1.0 + sum(a * np.cos(k * t) for k, a in modes))

    u = solve_dirichlet_2d(params, V, dom, sc.r_lo**gp, outer(sc.perturb_u), n_r=n_r, n_theta=sc.n_theta)
    v = solve_dirichlet_2d(params, V, dom, sc.inner_factor_v * sc.r_lo**gp, outer(sc.perturb_v), n_r=n_r,
                           n_theta=sc.n_theta)
    return u, v
