"""Radial potentials with Fuchsian singularities, scaling, and dilation limits.

A :class:`Potential` is the sum of

* a Hardy term ``-hardy_coeff * r^{-p}``,
* power shells ``amplitude * r^power`` on ``[r_lo, r_hi)``,
* an optional sampled table, interpolated piecewise-linearly in ``log r``
  (zero outside the table),

optionally multiplied by a bounded angular factor ``g(theta)`` in 2-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError
from .exponents import Params
from .numerics import bump, integrate_log, sphere_area


@dataclass(frozen=True)
class Shell:
    r_lo: float
    r_hi: float
    amplitude: float
    power: float

    def __post_init__(self):
        if not (0.0 <= self.r_lo < self.r_hi):
            raise DomainError(f"shell needs 0 <= r_lo < r_hi, got [{self.r_lo}, {self.r_hi})")


@dataclass(frozen=True)
class Potential:
    hardy_coeff: float = 0.0
    shells: tuple[Shell, ...] = ()
    sampled_r: tuple[float, ...] | None = None
    sampled_v: tuple[float, ...] | None = None
    angular: str | None = None  # expression in theta, see scenario.expressions
    _angular_fn: Callable | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "shells", tuple(self.shells))
        if (self.sampled_r is None) != (self.sampled_v is None):
            raise DomainError("sampled table needs both radii and values")
        if self.sampled_r is not None:
            r = np.asarray(self.sampled_r, dtype=float)
            v = np.asarray(self.sampled_v, dtype=float)
            if r.shape != v.shape or r.ndim != 1 or r.size < 2:
                raise DomainError("sampled table must be two equal-length 1-D sequences")
            if np.any(r <= 0) or np.any(np.diff(r) <= 0):
                raise DomainError("sampled radii must be positive and strictly increasing")
            object.__setattr__(self, "sampled_r", tuple(float(x) for x in r))
            object.__setattr__(self, "sampled_v", tuple(float(x) for x in v))
        if self.angular is not None and self._angular_fn is None:
            from .expressions import compile_expression

            object.__setattr__(self, "_angular_fn", compile_expression(self.angular, ("theta",)))

    @property
    def is_zero(self) -> bool:
        return (
            self.hardy_coeff == 0.0
            and all(s.amplitude == 0.0 for s in self.shells)
            and (self.sampled_v is None or all(v == 0.0 for v in self.sampled_v))
        )

    def breakpoints(self) -> list[float]:
        pts = []
        for s in self.shells:
            if s.r_lo > 0:
                pts.append(s.r_lo)
            if math.isfinite(s.r_hi):
                pts.append(s.r_hi)
        if self.sampled_r is not None:
            pts.extend(self.sampled_r)
        return pts

    def radial(self, r, p: float):
        """Radial part (without the angular factor)."""
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        if self.hardy_coeff != 0.0:
            out = out - self.hardy_coeff * r ** (-p)
        for s in self.shells:
            m = (r >= s.r_lo) & (r < s.r_hi)
            if np.any(m):
                out = out + np.where(m, s.amplitude * np.where(m, r, 1.0) ** s.power, 0.0)
        if self.sampled_r is not None:
            lr = np.log(np.asarray(self.sampled_r))
            vals = np.interp(np.log(r), lr, np.asarray(self.sampled_v), left=0.0, right=0.0)
            out = out + vals
        return out

    def angular_factor(self, theta):
        if self._angular_fn is None:
            return np.ones_like(np.asarray(theta, dtype=float))
        return np.broadcast_to(self._angular_fn(theta=np.asarray(theta, dtype=float)), np.shape(theta)).astype(float)


def evaluate(V: Potential, r, p: float, theta=None):
    """V(r, theta); the angular factor is applied only when theta is given."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise DomainError("potential evaluation needs r > 0")
    out = V.radial(r_arr, p)
    if theta is not None and V.angular is not None:
        out = out * V.angular_factor(theta)
    return float(out) if np.ndim(out) == 0 else out


def hardy(lam: float) -> Potential:
    return Potential(hardy_coeff=lam)


def shell_example(p: float, n_shells: int = 8) -> Potential:
    """Shells r^{-p} on [R_n, 2 R_n) with R_n = 2^{-n^2}, so R_{n+1}/R_n -> 0."""
    return Potential(shells=tuple(Shell(2.0 ** (-n * n), 2.0 ** (1 - n * n), 1.0, -p) for n in range(1, n_shells + 1)))


def shell_sequence(n_shells: int = 8) -> "DilationSequence":
    return DilationSequence(tuple(2.0 ** (-n * n) for n in range(1, n_shells + 1)), 0.0)


def fuchsian_bound(V: Potential, params: Params, r_lo: float | Sequence = None, r_hi: float | None = None,
                   grid_n: int = 2001, annuli: Sequence[tuple[float, float]] | None = None,
                   n_theta: int = 64) -> float:
    """Max of r^p |V| sampled on a log grid over one annulus or a list of annuli.

    A list of annuli covers essential sets: only those radii are inspected.
    """
    if annuli is None:
        if not (0 < r_lo < r_hi):
            raise DomainError("fuchsian_bound needs 0 < r_lo < r_hi")
        annuli = [(r_lo, r_hi)]
    best = 0.0
    theta = np.linspace(0.0, 2.0 * math.pi, n_theta, endpoint=False)
    amax = float(np.max(np.abs(V.angular_factor(theta)))) if V.angular is not None else 1.0
    for a, b in annuli:
        r = np.geomspace(a, b, grid_n)
        vals = r**params.p * np.abs(V.radial(r, params.p)) * amax
        best = max(best, float(np.max(vals)))
    return best


def scale(V: Potential, R: float, params: Params) -> Potential:
    """Structural form of V_R(x) = R^p V(R x)."""
    if not R > 0:
        raise DomainError("scale factor must be positive")
    p = params.p
    shells = tuple(Shell(s.r_lo / R, s.r_hi / R, s.amplitude * R ** (p + s.power), s.power) for s in V.shells)
    sr = sv = None
    if V.sampled_r is not None:
        sr = tuple(x / R for x in V.sampled_r)
        sv = tuple(R**p * x for x in V.sampled_v)
    return replace(V, shells=shells, sampled_r=sr, sampled_v=sv)


# ---------------------------------------------------------------------------
# weak* probing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DilationSequence:
    radii: tuple[float, ...]
    zeta: float  # 0.0 or math.inf

    def __post_init__(self):
        r = np.asarray(self.radii, dtype=float)
        if r.size < 2 or np.any(r <= 0):
            raise DomainError("dilation sequence needs at least two positive radii")
        d = np.diff(r)
        if self.zeta == 0.0 and not np.all(d < 0):
            raise DomainError("sequence toward 0 must be strictly decreasing")
        if self.zeta == math.inf and not np.all(d > 0):
            raise DomainError("sequence toward infinity must be strictly increasing")
        if self.zeta not in (0.0, math.inf):
            raise DomainError("zeta must be 0 or infinity")
        object.__setattr__(self, "radii", tuple(float(x) for x in r))

    @classmethod
    def geometric(cls, zeta: float, n: int = 40, ratio: float = 2.0, start: float = 1.0) -> "DilationSequence":
        k = np.arange(n)
        if zeta == 0.0:
            return cls(tuple(start * ratio ** (-k)), 0.0)
        return cls(tuple(start * ratio**k), math.inf)


@dataclass(frozen=True)
class TestProfile:
    """Radial bump centred at ``exp(center)`` with half-width ``width`` in log r."""

    center: float
    width: float
    weight: float = 1.0

    @property
    def support(self) -> tuple[float, float]:
        return math.exp(self.center - self.width), math.exp(self.center + self.width)

    def __call__(self, r):
        return self.weight * bump((np.log(r) - self.center) / self.width)


def canonical_tests(n: int = 10, lo: float = 2.0**-3, hi: float = 2.0**3) -> list[TestProfile]:
    """Ten overlapping smooth bumps whose supports tile [lo, hi]."""
    a, b = math.log(lo), math.log(hi)
    step = (b - a) / (n + 1)
    return [TestProfile(a + (j + 1) * step, step) for j in range(n)]


def probe_integral(V: Potential, phi: Callable, support: tuple[float, float], params: Params,
                   breakpoints: Sequence[float] = ()) -> float:
    """Integral of V phi dx for radial phi (angular factor averaged in 2-D).

    ``breakpoints`` lists radii where phi is not smooth (edges of summed bumps).
    """
    a, b = support
    ang = 1.0
    if V.angular is not None and params.d == 2:
        th = np.linspace(0.0, 2 * math.pi, 512, endpoint=False)
        ang = float(np.mean(V.angular_factor(th)))
    d = params.d
    val = integrate_log(lambda r: V.radial(r, params.p) * phi(r) * r ** (d - 1), a, b,
                        list(V.breakpoints()) + list(breakpoints), pieces_per_decade=16)
    return sphere_area(d) * ang * val


def _sum_profiles(profiles):
    def f(r):
        return sum(q(r) for q in profiles)

    lo = min(q.support[0] for q in profiles)
    hi = max(q.support[1] for q in profiles)
    return f, (lo, hi)


@dataclass
class ProbeReport:
    radii: list[float]
    deviations: list[list[float]]  # [n][test]
    max_deviation: list[float]
    converged: bool
    tol: float
    candidate: Potential
    note: str = ""


def weakstar_probe(V: Potential, seq: DilationSequence, candidate: Potential, params: Params,
                   tests: Sequence[TestProfile] | None = None, tol: float = 1e-6, tail: int = 3) -> ProbeReport:
    """Compare the integrals of V_{R_n} and of the candidate against test bumps.

    Convergence is declared when the worst deviation over the last ``tail``
    radii is below ``tol``; it is evidence of weak* convergence, not proof.
    """
    tests = list(tests) if tests is not None else canonical_tests()
    ref = [probe_integral(candidate, q, q.support, params) for q in tests]
    devs, worst = [], []
    for R in seq.radii:
        VR = scale(V, R, params)
        row = [abs(probe_integral(VR, q, q.support, params) - c) for q, c in zip(tests, ref)]
        devs.append(row)
        worst.append(max(row))
    tail = min(tail, len(worst))
    converged = max(worst[-tail:]) < tol
    note = "" if converged else "no convergence detected"
    return ProbeReport(list(seq.radii), devs, worst, converged, tol, candidate, note)


def restrict(V: Potential, lo: float, hi: float, params: Params, tol: float = 1e-6) -> Potential:
    """Terms of V visible in the window [lo, hi]; shells of Fuchsian size below tol are dropped."""
    shells = []
    for s in V.shells:
        a, b = max(s.r_lo, lo), min(s.r_hi, hi)
        if a >= b:
            continue
        r = np.geomspace(a, b, 64)
        if np.max(np.abs(s.amplitude) * r ** (s.power + params.p)) < tol:
            continue
        shells.append(Shell(a, b, s.amplitude, s.power))
    sr = sv = None
    if V.sampled_r is not None:
        r = np.asarray(V.sampled_r)
        v = np.asarray(V.sampled_v)
        m = (r >= lo) & (r <= hi)
        if np.count_nonzero(m) >= 2 and np.max(np.abs(v[m]) * r[m] ** params.p) >= tol:
            sr, sv = tuple(r[m]), tuple(v[m])
    hc = V.hardy_coeff if abs(V.hardy_coeff) >= tol else 0.0
    return Potential(hardy_coeff=hc, shells=tuple(shells), sampled_r=sr, sampled_v=sv, angular=V.angular)


@dataclass
class WeakFuchsianReport:
    weak_fuchsian: bool
    stages_used: int | None
    fixed_point: bool
    candidates: list[Potential]
    probes: list[ProbeReport]
    note: str = ""
    alternatives: list[Potential] = field(default_factory=list)


def _two_cluster(current: Potential, seq: DilationSequence, params: Params, tests, tol, lo, hi):
    """Limits along the even- and odd-indexed radii, if each subsequence converges."""
    radii = list(seq.radii)
    if len(radii) < 4:
        return None
    out = []
    for parity in (0, 1):
        sub = radii[parity::2]
        zeta = seq.zeta
        cand = restrict(scale(current, sub[-1], params), lo, hi, params, tol)
        rep = weakstar_probe(current, DilationSequence(tuple(sub), zeta), cand, params, tests, tol)
        if not rep.converged:
            return None
        out.append(cand)
    return out


def weak_fuchsian_check(V: Potential, seqs: Sequence[DilationSequence], params: Params,
                        tests: Sequence[TestProfile] | None = None, tol: float = 1e-6) -> WeakFuchsianReport:
    """Iterate dilation limits along ``seqs``; true iff some stage reaches the zero potential.

    The candidate limit at each stage is the scaled potential at the last
    radius, restricted to the probe window.
    """
    if len(seqs) > 3:
        raise DomainError("at most three dilation stages are supported")
    tests = list(tests) if tests is not None else canonical_tests()
    lo = min(q.support[0] for q in tests)
    hi = max(q.support[1] for q in tests)
    current = V
    candidates, probes = [], []
    fixed = False
    for k, seq in enumerate(seqs, start=1):
        cand = restrict(scale(current, seq.radii[-1], params), lo, hi, params, tol)
        rep = weakstar_probe(current, seq, cand, params, tests, tol)
        probes.append(rep)
        candidates.append(cand)
        if not rep.converged:
            pair = _two_cluster(current, seq, params, tests, tol, lo, hi)
            if pair is not None:
                # no rule selects one subsequence over the other: report both
                return WeakFuchsianReport(False, None, False, candidates, probes,
                                          f"stage {k}: scaled potentials oscillate between two limits", pair)
            return WeakFuchsianReport(False, None, False, candidates, probes,
                                      f"stage {k}: dilation limit not detected")
        if max(abs(probe_integral(cand, q, q.support, params)) for q in tests) < tol:
            return WeakFuchsianReport(True, k, False, candidates, probes, f"zero potential after {k} dilation(s)")
        fixed = restrict(current, lo, hi, params, tol) == cand
        current = cand
    note = "dilation fixed point, never reaches zero" if fixed else "zero potential not reached"
    return WeakFuchsianReport(False, None, fixed, candidates, probes, note)


@dataclass
class LqReport:
    q: float
    zeta: float
    norm_estimate: float
    norm_finite: bool
    exponent_ok: bool
    certified: bool
    shell_integrals: list[float]


def lq_criterion(V: Potential, q: float, params: Params, zeta: float, n_shells: int = 60) -> LqReport:
    """Estimate ||V||_{L^q} on B_1 (zeta=0) or outside B_1 (zeta=inf) over dyadic shells.

    Certified when the norm is finite and q > d/p (zeta=0), resp. 1 <= q < d/p (zeta=inf).
    """
    if q < 1:
        raise DomainError("need q >= 1")
    d, p = params.d, params.p
    ints = []
    for k in range(n_shells):
        if zeta == 0.0:
            a, b = 2.0 ** (-k - 1), 2.0 ** (-k)
        else:
            a, b = 2.0**k, 2.0 ** (k + 1)
        val = integrate_log(lambda r: np.abs(V.radial(r, p)) ** q * r ** (d - 1), a, b, V.breakpoints())
        ints.append(sphere_area(d) * val)
    arr = np.asarray(ints)
    total = float(arr.sum())
    tail = arr[-10:]
    if np.all(tail == 0.0):
        finite = True
        est = total
    elif np.any(tail == 0.0):
        finite = bool(np.all(tail[np.argmax(tail == 0.0):] == 0.0))
        est = total
    else:
        ratios = tail[1:] / tail[:-1]
        rho = float(np.exp(np.mean(np.log(ratios))))
        finite = rho < 1.0 - 1e-3 and bool(np.all(ratios < 1.0))
        est = total + (float(tail[-1]) * rho / (1.0 - rho) if finite else math.inf)
    if not finite:
        est = math.inf
    exponent_ok = q > d / p if zeta == 0.0 else (1.0 <= q < d / p)
    return LqReport(q, zeta, est, finite, exponent_ok, finite and exponent_ok, ints)
