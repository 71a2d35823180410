"""Exponent algebra for the Hardy-type model and plane-sector separable solutions.

The Hardy-type radial equation

    -|v'|^{p-2} [(p-1) v'' + (d-1)/r v'] - lam |v|^{p-2} v / r^p = 0

has power solutions r^gamma exactly when ``characteristic(gamma) == lam``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.integrate import solve_ivp

from .errors import DomainError, NumericError
from .numerics import uniform_derivative

DEGENERATE_GAP = 1e-6


@dataclass(frozen=True)
class Params:
    p: float
    d: int

    def __post_init__(self):
        if not (self.p > 1.0) or not math.isfinite(self.p):
            raise DomainError(f"need p > 1, got p={self.p}")
        if int(self.d) != self.d or self.d < 2:
            raise DomainError(f"need integer d >= 2, got d={self.d}")
        object.__setattr__(self, "d", int(self.d))

    @property
    def gamma_star(self) -> float:
        return (self.p - self.d) / self.p

    @property
    def fundamental_exponent(self) -> float:
        """(p - d)/(p - 1), the exponent of the radial fundamental solution."""
        return (self.p - self.d) / (self.p - 1.0)


@dataclass(frozen=True)
class ExponentPair:
    gamma_minus: float
    gamma_plus: float
    degenerate: bool


def hardy_constant(params: Params) -> float:
    return abs((params.p - params.d) / params.p) ** params.p


def characteristic(gamma, params: Params):
    """F(gamma) = -gamma |gamma|^{p-2} [gamma (p-1) + d - p]; vectorized."""
    p, d = params.p, params.d
    g = np.asarray(gamma, dtype=float)
    val = -np.sign(g) * np.abs(g) ** (p - 1.0) * (g * (p - 1.0) + d - p)
    return float(val) if val.ndim == 0 else val


def _characteristic_deriv(g: float, params: Params) -> float:
    p, d = params.p, params.d
    # d/dg of -|g|^{p-2} g (g (p-1) + d - p)
    return -(p - 1.0) * abs(g) ** (p - 2.0) * (g * (p - 1.0) + d - p) - abs(g) ** (p - 2.0) * g * (p - 1.0)


def _polish(g: float, lam: float, params: Params, lo: float, hi: float) -> float:
    # a couple of safeguarded Newton steps after the bracketed solve
    for _ in range(3):
        if g == 0.0:
            break
        fp = _characteristic_deriv(g, params)
        if fp == 0.0 or not math.isfinite(fp):
            break
        step = (characteristic(g, params) - lam) / fp
        cand = g - step
        if not (lo <= cand <= hi):
            break
        if abs(characteristic(cand, params) - lam) >= abs(characteristic(g, params) - lam):
            break
        g = cand
    return g


def solve_gamma(lam: float, params: Params, tol: float | None = None) -> ExponentPair:
    """Both roots of ``characteristic(gamma) == lam`` around gamma_star.

    Raises DomainError when lam exceeds the Hardy constant: the equation
    then has no positive solution.
    """
    c_h = hardy_constant(params)
    g_star = params.gamma_star
    if tol is None:
        tol = 1e-12 * max(1.0, c_h)
    if lam > c_h + tol:
        raise DomainError(
            f"supercritical coupling, no positive solution: lambda={lam!r} > c_H={c_h!r}"
        )
    if abs(lam - c_h) <= tol:
        return ExponentPair(g_star, g_star, True)

    if lam == 0.0:
        # exact roots of the two factors
        gm, gp = sorted((0.0, (params.p - params.d) / (params.p - 1.0)))
        return ExponentPair(gm, gp, False)

    def g(x):
        return characteristic(x, params) - lam

    roots = []
    for sign in (-1.0, 1.0):
        delta = max(1.0, abs(g_star))
        for _ in range(200):
            if g(g_star + sign * delta) < 0:
                break
            delta *= 2.0
        else:  # pragma: no cover - F -> -inf guarantees a bracket
            raise NumericError("could not bracket exponent root", lam=lam, params=params)
        a, b = sorted((g_star, g_star + sign * delta))
        root = optimize.brentq(g, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=2000)
        roots.append(_polish(root, lam, params, a, b))
    gm, gp = roots
    if gp - gm < DEGENERATE_GAP:
        return ExponentPair(g_star, g_star, True)
    return ExponentPair(gm, gp, False)


def fundamental_solution(params: Params, r):
    """Radial fundamental solution with unit normalization constant.

    r^{(p-d)/(p-1)} for p != d and log r for p == d.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("fundamental solution needs r > 0")
    if params.p == params.d:
        out = np.log(r)
    else:
        out = r ** params.fundamental_exponent
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# plane sectors, d = 2
# ---------------------------------------------------------------------------


def angular_coefficient(beta: float, p: float) -> float:
    """beta [beta (p-1) + 2 - p], the zeroth-order coefficient of the angular ODE."""
    return beta * (beta * (p - 1.0) + 2.0 - p)


def _angular_rhs(beta: float, p: float):
    c = angular_coefficient(beta, p)
    b2 = beta * beta

    def rhs(theta, y):
        phi, dphi = y
        s = b2 * phi * phi + dphi * dphi
        den = b2 * phi * phi + (p - 1.0) * dphi * dphi
        num = (p - 2.0) * b2 * phi * dphi * dphi + c * s * phi
        return [dphi, -num / den]

    return rhs


_RTOL = 1e-12
_ATOL = 1e-14


def _first_zero(beta: float, p: float, theta_max: float) -> float:
    rhs = _angular_rhs(beta, p)

    def hit(theta, y):
        return y[0]

    hit.terminal = True
    hit.direction = -1
    sol = solve_ivp(rhs, (0.0, theta_max), [0.0, 1.0], method="DOP853", rtol=_RTOL, atol=_ATOL, events=hit)
    if sol.status == -1:
        raise NumericError("angular shooting failed", beta=beta, p=p, message=sol.message)
    if sol.t_events[0].size:
        return float(sol.t_events[0][0])
    return math.inf


def _profile_raw(beta: float, p: float, theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    rhs = _angular_rhs(beta, p)
    theta = np.asarray(theta, dtype=float)
    if theta[0] == 0.0:
        sol = solve_ivp(rhs, (0.0, theta[-1]), [0.0, 1.0], method="DOP853", rtol=_RTOL, atol=_ATOL, t_eval=theta)
        return sol.y[0], sol.y[1]
    sol = solve_ivp(rhs, (0.0, theta[-1]), [0.0, 1.0], method="DOP853", rtol=_RTOL, atol=_ATOL, dense_output=True)
    y = sol.sol(theta)
    return y[0], y[1]


@functools.lru_cache(maxsize=64)
def _dense_profile(beta: float, p: float, aperture: float):
    """Continuous extension of the angular shooting solution on [0, aperture]."""
    sol = solve_ivp(_angular_rhs(beta, p), (0.0, aperture), [0.0, 1.0], method="DOP853", rtol=_RTOL,
                    atol=_ATOL, dense_output=True)
    if sol.status == -1:
        raise NumericError("angular shooting failed", beta=beta, p=p, message=sol.message)
    return sol.sol


def _solve_branch(p_target: float, aperture: float, sign: float) -> float:
    """Continuation in p from the linear value sign*pi/aperture."""
    theta_max = 6.0 * aperture + 2.0 * math.pi
    beta = sign * math.pi / aperture
    n_steps = max(1, int(math.ceil(abs(p_target - 2.0) / 0.1 - 1e-12)))
    history = []
    for pk in np.linspace(2.0, p_target, n_steps + 1)[1:]:

        def g(b, pk=pk):
            return min(_first_zero(b, pk, theta_max), theta_max) - aperture

        # |beta| larger -> faster oscillation -> earlier zero
        lo_mag, hi_mag = abs(beta), abs(beta)
        g0 = g(beta)
        factor = 1.15
        found = g0 == 0.0
        for _ in range(200):
            if found:
                break
            if g0 > 0:  # zero too late: increase |beta|
                hi_mag *= factor
                if g(sign * hi_mag) <= 0:
                    found = True
                    break
                lo_mag = hi_mag
            else:
                lo_mag /= factor
                if g(sign * lo_mag) >= 0:
                    found = True
                    break
                hi_mag = lo_mag
        if not found:
            raise NumericError("sector shooting failed to bracket", p=pk, aperture=aperture, history=history)
        if lo_mag == hi_mag:
            beta = sign * lo_mag
        else:
            beta = optimize.brentq(lambda m: g(sign * m), lo_mag, hi_mag, xtol=1e-14, rtol=1e-14, maxiter=300)
            beta = sign * beta
        resid = g(beta)
        history.append((float(pk), float(beta), float(resid)))
        if abs(resid) > 1e-9 * aperture:
            raise NumericError("sector shooting did not converge", p=pk, aperture=aperture, history=history)
    return float(beta)


@dataclass(frozen=True)
class SectorExponents:
    p: float
    aperture: float
    beta_regular: float
    beta_singular: float
    theta: np.ndarray = field(repr=False)
    profile_regular: np.ndarray = field(repr=False)
    profile_singular: np.ndarray = field(repr=False)
    scale_regular: float = field(default=1.0, repr=False)
    scale_singular: float = field(default=1.0, repr=False)

    def profile(self, which: str, theta) -> np.ndarray:
        """Angular profile (normalized to unit maximum) at arbitrary angles in [0, aperture]."""
        beta, scale = self._pick(which)
        theta = np.asarray(theta, dtype=float)
        y = _dense_profile(beta, self.p, self.aperture)(theta.ravel())
        return (y[0] / scale).reshape(theta.shape)

    def profile_derivative(self, which: str, theta) -> np.ndarray:
        beta, scale = self._pick(which)
        theta = np.asarray(theta, dtype=float)
        y = _dense_profile(beta, self.p, self.aperture)(theta.ravel())
        return (y[1] / scale).reshape(theta.shape)

    def _pick(self, which):
        if which in ("regular", "infinity", "inf"):
            return self.beta_regular, self.scale_regular
        if which in ("singular", "zero", "0"):
            return self.beta_singular, self.scale_singular
        raise ValueError(f"unknown profile {which!r}")


def sector_exponents(p: float, aperture: float, n_theta: int = 1025) -> SectorExponents:
    """Exponents beta_inf > 0 > beta_0 of the separable p-harmonic functions
    r^beta phi(theta) in the sector 0 < theta < aperture vanishing on both rays.
    """
    if not p > 1.0:
        raise DomainError("need p > 1")
    if not (0.0 < aperture <= 2.0 * math.pi + 1e-15):
        raise DomainError("aperture must lie in (0, 2 pi]")
    b_reg = _solve_branch(p, aperture, +1.0)
    b_sing = _solve_branch(p, aperture, -1.0)
    theta = np.linspace(0.0, aperture, n_theta)
    phi_r, _ = _profile_raw(b_reg, p, theta)
    phi_s, _ = _profile_raw(b_sing, p, theta)
    sr, ss = float(np.max(phi_r)), float(np.max(phi_s))
    return SectorExponents(p, aperture, b_reg, b_sing, theta, phi_r / sr, phi_s / ss, sr, ss)


def angular_residual(exps: SectorExponents, which: str = "regular", n_theta: int = 4001) -> float:
    """Max-norm residual of the divergence-form angular equation

        ((beta^2 phi^2 + phi'^2)^{(p-2)/2} phi')' + c(beta) (beta^2 phi^2 + phi'^2)^{(p-2)/2} phi = 0

    on the computed profile, relative to the size of the zeroth-order term.
    """
    beta, _ = exps._pick(which)
    p = exps.p
    theta = np.linspace(0.0, exps.aperture, n_theta)
    phi, dphi = _profile_raw(beta, p, theta)
    g = (beta**2 * phi**2 + dphi**2) ** ((p - 2.0) / 2.0)
    flux = g * dphi
    dflux = uniform_derivative(flux, theta[1] - theta[0])
    zeroth = angular_coefficient(beta, p) * g * phi
    res = (dflux + zeroth)[4:-4]
    scale = max(float(np.max(np.abs(zeroth))), float(np.max(np.abs(dflux))))
    return float(np.max(np.abs(res)) / scale)
