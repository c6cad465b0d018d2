"""Entropy-rate bounds as parameterized formulas with applicability verdicts.

Every formula takes a :class:`BoundContext` and returns a :class:`BoundReport`
whose ``value`` is ``None`` when the formula's convergence or range
conditions fail. Lattice constants (c, c1, c2, c_k) are plain inputs.
"""
from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

TAIL_RTOL = 1e-10
RATIO_THRESHOLDS = (0.5, 0.9)
# measured values this small count as zero against a vanishing bound
ZERO_TOL = 1e-12


class BoundError(ValueError):
    pass


@dataclass(frozen=True)
class BoundContext:
    alpha: float = 2.0
    h_norm: float | None = None
    dim_b: float | None = None
    dim_aa: float | None = None
    hbar: float | None = None
    d0: int = 2
    boundary_area: float = 1.0
    R: int | None = None
    k: int | None = None
    w: float | None = None
    xi: float | None = None
    spatial_dim: int = 1
    c: float = 18.0
    c1: float = 1.0
    c2: float = 1.0
    ck: float = 1.0
    c_prime: float | None = None
    vn_prefactor: float = 2.0
    vershynina_prefactor: float = 9.0
    tr_rho_alpha: float | None = None
    v_boundary: int | None = None
    J: float | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise BoundError(f"alpha must be positive, got {self.alpha}")
        for name in ("dim_b", "dim_aa", "d0", "spatial_dim"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise BoundError(f"{name} must be >= 1, got {v}")
        for name in ("h_norm", "hbar", "boundary_area"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise BoundError(f"{name} must be >= 0, got {v}")

    def replace(self, **kw) -> "BoundContext":
        return dataclasses.replace(self, **kw)

    def need(self, *names: str):
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise BoundError(f"missing input: {', '.join(missing)}")
        return tuple(getattr(self, n) for n in names)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True)
class BoundReport:
    formula_id: str
    value: float | None
    reason: str
    inputs: BoundContext

    @property
    def applicable(self) -> bool:
        return self.value is not None

    @property
    def alpha(self) -> float:
        return self.inputs.alpha


def _ok(fid, value, ctx, reason="ok") -> BoundReport:
    return BoundReport(fid, float(value), reason, ctx)


def _na(fid, reason, ctx) -> BoundReport:
    return BoundReport(fid, None, reason, ctx)


def renyi_prefactor(alpha: float) -> float:
    """2 alpha / |alpha - 1|."""
    if alpha == 1:
        raise BoundError("prefactor 2a/|a-1| is undefined at alpha = 1")
    return 2.0 * alpha / abs(alpha - 1.0)


def _divergence_note(alpha: float) -> str:
    return "ok; prefactor diverges as alpha -> 1" if abs(alpha - 1.0) < 1e-3 else "ok"


# -- numeric series ---------------------------------------------------------

# Bernoulli numbers B2, B4, B6, B8 for the Euler-Maclaurin tail
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30)


def power_series_sum(s: float, rtol: float = TAIL_RTOL, n_head: int = 64) -> tuple[float, float]:
    """sum_{r>=1} r^{-s} for s > 1, with an error bound.

    Direct head sum up to n_head - 1, then Euler-Maclaurin for the tail
    sum_{r>=n} r^{-s}; the error estimate is the first omitted term. The
    head grows until that estimate is below ``rtol`` of the total.
    """
    if not s > 1:
        raise BoundError(f"sum of r^-{s} diverges")
    n = n_head
    while True:
        head = math.fsum(r ** -s for r in range(1, n))
        tail = n ** (1 - s) / (s - 1) + 0.5 * n ** -s
        # derivative of r^-s of order 2j-1 is -(s)(s+1)..(s+2j-2) r^{-s-2j+1}
        rising = s
        err = 0.0
        for j, b in enumerate(_BERNOULLI, start=1):
            term = b / math.factorial(2 * j) * rising * n ** (-s - 2 * j + 1)
            if j == len(_BERNOULLI):
                err = abs(term)
            else:
                tail += term
                rising *= (s + 2 * j - 1) * (s + 2 * j)
        total = head + tail
        if err <= rtol * abs(total) or n > 1 << 20:
            return total, err
        n *= 4


def _logsumexp(logs: list[float]) -> float:
    m = max(logs)
    return m + math.log(math.fsum(math.exp(x - m) for x in logs))


def stretched_exp_log_sum(c1: float, D: int, d0: float, xi: float, w: float,
                          rtol: float = TAIL_RTOL, max_terms: int = 10_000_000) -> float:
    """log of sum_{r>=1} c1 r^D d0^{2 c1 r^D} exp(-(r/xi)^w).

    Terms are summed in log space. Once consecutive term ratios are below 1
    and nonincreasing, the tail is bounded by the geometric series of the
    current ratio, and summation stops when that bound is below ``rtol`` of
    the partial sum.
    """
    lg = math.log(d0)

    def logf(r: int) -> float:
        rd = float(r) ** D
        return math.log(c1) + D * math.log(r) + 2 * c1 * rd * lg - (r / xi) ** w

    logs = [logf(1)]
    prev_ratio = math.inf
    r = 1
    while r < max_terms:
        r += 1
        logs.append(logf(r))
        ratio = logs[-1] - logs[-2]
        if ratio < 0 and ratio <= prev_ratio:
            q = math.exp(ratio)
            log_tail = logs[-1] + ratio - math.log1p(-q)
            if log_tail - _logsumexp(logs) < math.log(rtol):
                return _logsumexp(logs)
        prev_ratio = ratio
    raise BoundError("stretched-exponential sum did not converge within the term budget")


def xi_critical(c1: float, d0: float, D: int) -> float:
    """(1 / (2 c1 log d0))^{1/D}."""
    return (1.0 / (2.0 * c1 * math.log(d0))) ** (1.0 / D)


# -- formulas -----------------------------------------------------------------

def bound_nonlocal_independent(ctx: BoundContext) -> BoundReport:
    fid = "nonlocal_independent"
    h, db = ctx.need("h_norm", "dim_b")
    if not ctx.alpha > 1:
        return _na(fid, "requires alpha > 1", ctx)
    return _ok(fid, renyi_prefactor(ctx.alpha) * h * db**2, ctx)


def bound_nonlocal_state_independent(ctx: BoundContext) -> BoundReport:
    fid = "nonlocal_state_independent"
    h, db, da = ctx.need("h_norm", "dim_b", "dim_aa")
    a = ctx.alpha
    if not a > 1:
        return _na(fid, "requires alpha > 1", ctx)
    return _ok(fid, renyi_prefactor(a) * h * (da * db) ** ((a - 1) / a), ctx, _divergence_note(a))


def state_independent_exponent(alpha: float) -> float:
    """Power of D_B for D_aA = D_B: 2(alpha - 1)/alpha."""
    return 2.0 * (alpha - 1.0) / alpha


def bound_vn_nonlocal(ctx: BoundContext) -> BoundReport:
    h, db, da = ctx.need("h_norm", "dim_b", "dim_aa")
    return _ok("vn_nonlocal", ctx.vn_prefactor * h * math.log(min(da, db)), ctx)


def bound_vershynina_state(ctx: BoundContext, tr_rho_alpha: float | None = None) -> BoundReport:
    fid = "vershynina_state"
    if tr_rho_alpha is not None:
        ctx = ctx.replace(tr_rho_alpha=tr_rho_alpha)
    h, db, tr = ctx.need("h_norm", "dim_b", "tr_rho_alpha")
    a = ctx.alpha
    if not a > 1:
        return _na(fid, "requires alpha > 1", ctx)
    if not 0 < tr <= 1 + 1e-12:
        raise BoundError(f"Tr rho^alpha must be in (0, 1], got {tr}")
    p = db ** -2.0
    if a < 2:
        tail = (1 - p) * (1 - (1 - p) ** (a - 1))
    else:
        tail = p - p**a
    val = ctx.vershynina_prefactor * a / (a - 1) * h * db ** (1 + a) / tr * tail
    return _ok(fid, val, ctx)


def bound_finite_range(ctx: BoundContext) -> BoundReport:
    fid = "finite_range"
    R, hb = ctx.need("R", "hbar")
    if R < 1:
        raise BoundError(f"range R must be >= 1, got {R}")
    D, a = ctx.spatial_dim, ctx.alpha
    if a == 1:
        b1 = 18.0 * ctx.c1 * ctx.c2 * R ** (D + 1)
        return _ok(fid, b1 * ctx.boundary_area * hb * math.log(ctx.d0), ctx)
    b = renyi_prefactor(a) * ctx.c2 * R * float(ctx.d0) ** (2 * ctx.c1 * R**D)
    return _ok(fid, b * ctx.boundary_area * hb, ctx)


def bound_power_law_vn(ctx: BoundContext) -> BoundReport:
    fid = "power_law_vn"
    w, hb = ctx.need("w", "hbar")
    D = ctx.spatial_dim
    if not w > 2 * D + 1:
        return _na(fid, f"requires w > 2D+1 = {2 * D + 1}", ctx)
    s, _ = power_series_sum(w - 2 * D)
    c = 18.0 * ctx.c1**2 * s
    return _ok(fid, c * hb * ctx.boundary_area * math.log(ctx.d0), ctx)


def bound_stretched_exp_renyi(ctx: BoundContext) -> BoundReport:
    fid = "stretched_exp_renyi"
    w, xi, hb = ctx.need("w", "xi", "hbar")
    D, a = ctx.spatial_dim, ctx.alpha
    if a == 1:
        return _na(fid, "alpha = 1 is covered by power_law_vn", ctx)
    if w < D:
        return _na(fid, f"requires w >= D = {D}", ctx)
    if w == D:
        xc = xi_critical(ctx.c1, ctx.d0, D)
        if not xi < xc:
            return _na(fid, f"requires xi < xi_c = {xc!r} at w = D", ctx)
    log_s = stretched_exp_log_sum(ctx.c1, D, ctx.d0, xi, w)
    log_val = math.log(renyi_prefactor(a)) + log_s
    if hb == 0 or ctx.boundary_area == 0:
        return _ok(fid, 0.0, ctx)
    log_val += math.log(ctx.boundary_area) + math.log(hb)
    if log_val > 709.0:
        return _ok(fid, math.inf, ctx, "ok; value overflows double precision")
    return _ok(fid, math.exp(log_val), ctx)


def _k_local_factor(ctx: BoundContext, k: int) -> tuple[float, str]:
    if ctx.alpha == 1:
        note = "ok; alpha = 1 branch (the summary statement covers alpha > 1 only)"
        return ctx.c * (k - 1) * math.log(ctx.d0), note
    cp = ctx.c_prime if ctx.c_prime is not None else renyi_prefactor(ctx.alpha)
    return cp * float(ctx.d0) ** (2 * (k - 1)), "ok"


def bound_k_local(ctx: BoundContext, v_boundary: int | None = None) -> BoundReport:
    if v_boundary is not None:
        ctx = ctx.replace(v_boundary=v_boundary)
    k, hb, vb = ctx.need("k", "hbar", "v_boundary")
    if k < 2:
        raise BoundError(f"k-local bound needs k >= 2, got {k}")
    f, note = _k_local_factor(ctx, k)
    return _ok("k_local", vb * hb * f, ctx, note)


def bound_k_local_geo(ctx: BoundContext) -> BoundReport:
    fid = "k_local_geo"
    k, w, hb = ctx.need("k", "w", "hbar")
    D = ctx.spatial_dim
    if not w > D * k:
        return _na(fid, f"requires w > Dk = {D * k}", ctx)
    s, _ = power_series_sum(w + 1 - D * k)
    f, note = _k_local_factor(ctx, k)
    return _ok(fid, ctx.ck * s * f * hb, ctx, note)


def bound_mfim(alpha: float | BoundContext, J: float | None = None) -> BoundReport:
    ctx = alpha if isinstance(alpha, BoundContext) else BoundContext(alpha=alpha, J=J)
    if J is not None:
        ctx = ctx.replace(J=J)
    (J,) = ctx.need("J")
    if ctx.alpha == 1:
        return _ok("mfim", 2.0 * abs(J) * math.log(2.0), ctx)
    return _ok("mfim", 8.0 * ctx.alpha / abs(ctx.alpha - 1.0) * abs(J), ctx)


def total_growth_cap(source: BoundContext | BoundReport, t: float) -> float:
    """Linear cap S_alpha(t) <= (alpha = 1 rate bound) * t, valid for every alpha >= 1.

    ``source`` is either an alpha = 1 rate report (power-law, finite-range or
    MFIM) or a context, from which the power-law bound is used when w is set
    and the finite-range b1 otherwise.
    """
    if t < 0:
        raise BoundError("time must be non-negative")
    if isinstance(source, BoundContext):
        ctx = source.replace(alpha=1.0)
        rep = bound_power_law_vn(ctx) if ctx.w is not None else bound_finite_range(ctx)
    else:
        rep = source
        if rep.alpha != 1:
            raise BoundError("the growth cap integrates an alpha = 1 rate bound")
    if not rep.applicable:
        raise BoundError(f"underlying rate bound inapplicable: {rep.reason}")
    return rep.value * t


def syk_chain_rate(alpha: float, beta: float, J0: float, J1: float, N: int) -> float:
    """alpha/(alpha-1) (2 pi / beta) J1^2 N / (8 pi J0^2)."""
    if not alpha > 1:
        raise BoundError("chain growth rate needs alpha > 1")
    if not beta > 0:
        raise BoundError("beta must be positive")
    return alpha / (alpha - 1) * (2 * math.pi / beta) * J1**2 * N / (8 * math.pi * J0**2)


def syk_chain_perturbative(beta: float, J0: float, J1: float, margin: float = 0.1) -> bool:
    """True when J1 <= margin * J0 / sqrt(beta J0), the small-coupling regime."""
    return abs(J1) <= margin * J0 / math.sqrt(beta * J0)


FORMULAS: dict[str, Callable[[BoundContext], BoundReport]] = {
    "nonlocal_independent": bound_nonlocal_independent,
    "nonlocal_state_independent": bound_nonlocal_state_independent,
    "vn_nonlocal": bound_vn_nonlocal,
    "vershynina_state": bound_vershynina_state,
    "finite_range": bound_finite_range,
    "power_law_vn": bound_power_law_vn,
    "stretched_exp_renyi": bound_stretched_exp_renyi,
    "k_local": bound_k_local,
    "k_local_geo": bound_k_local_geo,
    "mfim": bound_mfim,
}


def evaluate(formula_id: str, ctx: BoundContext) -> BoundReport:
    """Evaluate by id; missing inputs give an inapplicable report instead of raising."""
    try:
        f = FORMULAS[formula_id]
    except KeyError:
        raise BoundError(f"unknown formula {formula_id!r}") from None
    try:
        return f(ctx)
    except BoundError as exc:
        return _na(formula_id, str(exc), ctx)


# -- comparison and sweeps -----------------------------------------------------

@dataclass(frozen=True)
class ComparisonRow:
    key: str
    measured: float
    bound: float | None
    ratio: float | None
    flag: str


def saturation_flag(ratio: float, thresholds=RATIO_THRESHOLDS) -> str:
    lo, hi = thresholds
    if ratio >= 1:
        return "exceeds"
    if ratio >= hi:
        return "saturating"
    if ratio >= lo:
        return "above_half"
    return "ok"


def compare_report(measured: Mapping[str, float], bounds: Mapping[str, BoundReport],
                   thresholds=RATIO_THRESHOLDS) -> list[ComparisonRow]:
    """measured/bound per key; inapplicable bounds are carried without a ratio."""
    rows = []
    for key, m in measured.items():
        rep = bounds[key]
        if not rep.applicable:
            rows.append(ComparisonRow(key, float(m), None, None, "inapplicable"))
            continue
        b = rep.value
        if b > 0:
            ratio = abs(m) / b
        else:
            ratio = 0.0 if abs(m) <= ZERO_TOL else math.inf
        rows.append(ComparisonRow(key, float(m), b, ratio, saturation_flag(ratio, thresholds)))
    return rows


def sweep_bounds(grid: Mapping[str, Iterable], formulas: Iterable[str] | None = None,
                 base: BoundContext | None = None) -> tuple[tuple[str, ...], list[tuple]]:
    """Evaluate formulas over the Cartesian product of ``grid``.

    Returns (header, rows) with header ``formulaId, alpha, <grid keys>, value,
    applicable, reason``; grid keys are BoundContext field names. An empty
    grid, or one with an empty axis, yields no rows.
    """
    base = base or BoundContext()
    fields = {f.name for f in dataclasses.fields(BoundContext)}
    keys = [k for k in grid if k != "alpha"]
    unknown = [k for k in grid if k not in fields]
    if unknown:
        raise BoundError(f"unknown grid parameter(s): {', '.join(unknown)}")
    formulas = list(formulas) if formulas is not None else list(FORMULAS)
    header = ("formulaId", "alpha", *keys, "value", "applicable", "reason")
    alphas = list(grid.get("alpha", [base.alpha]))
    values = [list(grid[k]) for k in keys]
    rows = []
    if not grid or any(len(v) == 0 for v in values) or not alphas:
        return header, rows
    for fid in formulas:
        for a in alphas:
            for combo in itertools.product(*values):
                ctx = base.replace(alpha=a, **dict(zip(keys, combo)))
                rep = evaluate(fid, ctx)
                val = rep.value if rep.applicable else "inapplicable"
                rows.append((fid, a, *combo, val, rep.applicable, rep.reason))
    return header, rows
