"""Small numerical helpers: grids, smooth cutoffs, quadrature, derivatives."""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

DEFAULT_PER_DECADE = 256


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)


def log_grid(r_lo: float, r_hi: float, per_decade: int = DEFAULT_PER_DECADE, n: int | None = None) -> np.ndarray:
    """Log-spaced grid with exact endpoints (increasing or decreasing)."""
    if r_lo <= 0 or r_hi <= 0:
        raise ValueError("log grid needs positive endpoints")
    if n is None:
        decades = abs(math.log10(r_hi / r_lo))
        n = max(int(math.ceil(decades * per_decade)) + 1, 3)
    t = np.linspace(math.log(r_lo), math.log(r_hi), n)
    r = np.exp(t)
    r[0], r[-1] = r_lo, r_hi
    return r


def phi_p(s, p: float):
    """Phi_p(s) = |s|^(p-2) s."""
    s = np.asarray(s, dtype=float)
    return np.sign(s) * np.abs(s) ** (p - 1.0)


def phi_p_inv(t, p: float):
    """Inverse of phi_p: sign(t) |t|^(1/(p-1))."""
    t = np.asarray(t, dtype=float)
    return np.sign(t) * np.abs(t) ** (1.0 / (p - 1.0))


def _ebump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smoothstep(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)
    a = _ebump(x)
    b = _ebump(1.0 - x)
    return a / (a + b)


def smoothstep_deriv(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = (x > 0) & (x < 1)
    xm = x[m]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    da = a / xm**2
    db = -b / (1.0 - xm) ** 2
    out[m] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out


def bump(x):
    """Standard C-infinity bump supported on (-1, 1), value 1/e at 0."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    m = np.abs(x) < 1
    out[m] = np.exp(-1.0 / (1.0 - x[m] ** 2))
    return out


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss(n: int):
    if n not in _GL_CACHE:
        _GL_CACHE[n] = np.polynomial.legendre.leggauss(n)
    return _GL_CACHE[n]


def integrate_log(f, a: float, b: float, breakpoints=(), nodes: int = 48, pieces_per_decade: int = 4) -> float:
    """Integral of f(r) dr over [a, b] by Gauss-Legendre in t = log r.

    ``f`` must be vectorized. Pieces are split at every breakpoint inside
    (a, b) so discontinuous integrands (shell edges) stay exact.
    """
    if b <= a:
        return 0.0
    cuts = sorted({a, b, *[c for c in breakpoints if a < c < b]})
    x, w = _gauss(nodes)
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        tlo, thi = math.log(lo), math.log(hi)
        k = max(1, int(math.ceil((thi - tlo) / math.log(10.0) * pieces_per_decade)))
        edges = np.linspace(tlo, thi, k + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        ww = (half[:, None] * w[None, :]).ravel()
        r = np.exp(t)
        total += float(np.sum(ww * f(r) * r))
    return total


def simpson_log(values: np.ndarray, r: np.ndarray) -> float:
    """Integral of values(r) dr for samples on a log-spaced grid (Simpson in log r)."""
    return float(integrate.simpson(values * r, x=np.log(r)))


# central first-derivative weights, 8th order (offsets 1..4)
_D1_W8 = np.array([4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0])


def uniform_derivative(y: np.ndarray, h: float) -> np.ndarray:
    """First derivative on a uniform grid.

    8th-order central differences on nodes 4..n-5, second-order one-sided
    elsewhere (``np.gradient``); callers that need full accuracy should only
    trust ``[4:-4]``.
    """
    y = np.asarray(y, dtype=float)
    out = np.gradient(y, h, edge_order=2)
    n = y.size
    if n >= 9:
        acc = np.zeros(n - 8)
        for k, wk in enumerate(_D1_W8, start=1):
            acc += wk * (y[4 + k : n - 4 + k] - y[4 - k : n - 4 - k])
        out[4:-4] = acc / h
    return out
