"""Closed-form GUE second-Renyi curve and the Bessel functions it needs.

The ensemble-averaged second Renyi entropy of a half/half cut under a
GUE Hamiltonian of dimension D = d^V is

    S2(t) = -log(R(t) + (1 - R(t)) * 2 / d^{V/2}),   R(t) = J1(2t)^4 / t^4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

BESSEL_DOMAIN = 100.0
_SERIES_LIMIT = 8.0


class AnalyticsError(ValueError):
    pass


def _series(n: int, x: float) -> float:
    half = 0.5 * x
    term = half**n / math.factorial(n)
    terms = [term]
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        terms.append(term)
        if abs(term) < 1e-18 * max(1e-300, abs(terms[0])) and k > 2:
            break
    return math.fsum(terms)


def _miller(x: float) -> tuple[float, float, float]:
    """J0, J1, J2 at x > 0 by backward recurrence normalized with J0 + 2 sum J_2k = 1."""
    start = 2 * ((int(x) + 20 + int(math.sqrt(40.0 * x))) // 2)
    j_next, j = 0.0, 1e-30
    norm = 0.0
    vals = {}
    for k in range(start, 0, -1):
        j_prev = (2.0 * k / x) * j - j_next
        j_next, j = j, j_prev
        if abs(j) > 1e250:
            j *= 1e-250
            j_next *= 1e-250
            norm *= 1e-250
            vals = {m: v * 1e-250 for m, v in vals.items()}
        m = k - 1
        if m <= 2:
            vals[m] = j
        if m % 2 == 0 and m > 0:
            norm += 2.0 * j
    norm += j  # J0
    return vals[0] / norm, vals[1] / norm, vals[2] / norm


def _bessel_scalar(n: int, x: float) -> float:
    x = float(x)
    if not math.isfinite(x) or abs(x) > BESSEL_DOMAIN:
        raise AnalyticsError(f"Bessel argument {x} outside |x| <= {BESSEL_DOMAIN}")
    sign = -1.0 if (x < 0 and n % 2) else 1.0
    ax = abs(x)
    if ax == 0.0:
        return 1.0 if n == 0 else 0.0
    if ax <= _SERIES_LIMIT:
        return sign * _series(n, ax)
    return sign * _miller(ax)[n]


def bessel_j(n: int, x):
    """Bessel function of the first kind J_n for n in {0, 1, 2}, |x| <= 100."""
    if n not in (0, 1, 2):
        raise AnalyticsError(f"order {n} not supported")
    if np.ndim(x) == 0:
        return _bessel_scalar(n, x)
    arr = np.asarray(x, dtype=float)
    return np.array([_bessel_scalar(n, v) for v in arr.ravel()]).reshape(arr.shape)


def _j1_over_t(t: float) -> float:
    """J1(2t)/t with the removable singularity at t = 0 filled in."""
    if t == 0.0:
        return 1.0
    return _bessel_scalar(1, 2.0 * t) / t


@dataclass(frozen=True)
class GueCurveParams:
    d: int = 2
    V: int = 8

    def __post_init__(self):
        if self.d < 2:
            raise AnalyticsError("onsite dimension d must be >= 2")
        if self.V < 2 or self.V % 2:
            raise AnalyticsError("total site count V must be even and >= 2")

    @property
    def half_dim(self) -> float:
        """d^{V/2} = D_A = D_B."""
        return float(self.d) ** (self.V // 2)

    @property
    def dim(self) -> int:
        return self.d**self.V

    @property
    def plateau(self) -> float:
        return 0.5 * self.V * math.log(self.d) - math.log(2.0)


def _scalar_or_array(func, t):
    if np.ndim(t) == 0:
        return func(float(t))
    arr = np.asarray(t, dtype=float)
    return np.array([func(v) for v in arr.ravel()]).reshape(arr.shape)


def gue_r(t):
    def f(x):
        if x < 0:
            raise AnalyticsError("R(t) needs t >= 0")
        return _j1_over_t(x) ** 4

    return _scalar_or_array(f, t)


def gue_s2bar(t, params: GueCurveParams = GueCurveParams()):
    c = 2.0 / params.half_dim

    def f(x):
        R = gue_r(x)
        return 0.0 - math.log(R + (1.0 - R) * c)

    return _scalar_or_array(f, t)


def gue_s2_rate(t, params: GueCurveParams = GueCurveParams()):
    """Exact derivative of :func:`gue_s2bar`: 8(q-2) J1^3 J2 / ((q-2) J1^4 + 2 t^4), q = d^{V/2}."""
    q = params.half_dim

    def f(x):
        if x <= 0:
            raise AnalyticsError("rate is defined for t > 0")
        j1 = _bessel_scalar(1, 2.0 * x)
        j2 = _bessel_scalar(2, 2.0 * x)
        return 8.0 * (q - 2.0) * j1**3 * j2 / ((q - 2.0) * j1**4 + 2.0 * x**4)

    return _scalar_or_array(f, t)


def find_t_star(tol: float = 1e-13) -> float:
    """First positive root of J1(2t) (half the first zero of J1), by bisection."""
    step = 0.05
    lo = step
    while _bessel_scalar(1, 2.0 * (lo + step)) > 0:
        lo += step
    hi = lo + step
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _bessel_scalar(1, 2.0 * mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_max(f, a: float, b: float, tol: float = 1e-10) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


@dataclass(frozen=True)
class MaxSlope:
    t_peak: float
    max_rate: float


def gue_max_slope(params: GueCurveParams, n_grid: int = 2000) -> MaxSlope:
    """Maximum of |dS2/dt| over t in (0, t* + 1]: coarse grid then golden-section refinement."""
    ts = find_t_star()
    grid = np.linspace(ts + 1.0, 0.0, n_grid, endpoint=False)[::-1]
    vals = np.abs(gue_s2_rate(grid, params))
    i = int(np.argmax(vals))
    h = grid[1] - grid[0]
    a, b = max(grid[i] - h, 1e-9), grid[i] + h
    t = _golden_max(lambda x: abs(gue_s2_rate(x, params)), a, b)
    return MaxSlope(t, abs(gue_s2_rate(t, params)))


def slope_scaling_exponent(Vs, d: int = 2) -> tuple[float, float]:
    """Least-squares slope and RMS residual of log max|dS2/dt| against V."""
    Vs = np.asarray(Vs, dtype=float)
    logs = np.array([math.log(gue_max_slope(GueCurveParams(d, int(v))).max_rate) for v in Vs])
    A = np.vstack([Vs, np.ones_like(Vs)]).T
    coef, *_ = np.linalg.lstsq(A, logs, rcond=None)
    res = logs - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def curve_table(times, params: GueCurveParams):
    """Rows (t, R, S2bar, dS2/dt); the rate at t = 0 is its limit 0."""
    for t in np.asarray(times, dtype=float):
        rate = 0.0 if t == 0 else float(gue_s2_rate(t, params))
        yield float(t), float(gue_r(t)), float(gue_s2bar(t, params)), rate


CURVE_TABLE_HEADER = ("t", "R", "s2bar", "s2rate")
