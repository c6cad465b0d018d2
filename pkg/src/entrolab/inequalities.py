"""Ordered operator pairs 0 <= X <= Y <= I and checkers for the trace-norm inequalities.

Two samplers are provided. The algebraic one draws Y and a contraction K and
sets X = Y^{1/2} K Y^{1/2}. The physical one builds X and Y from a random
state on A + Lambda + purifier the way the entropy-rate bounds do, with
p = D_Lambda^{-2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .linalg import EPS_FLOOR, HermitianEig, eigh, floored_values

VIOLATION_TOL = 1e-9
WITNESS_TOL = 1e-12
DEFAULT_ALPHAS = (1.5, 2.0, 3.0, 5.0)
PAIR_CAP = 4096


class InequalityError(ValueError):
    pass


def sample_rng(master_seed: int, counter: int) -> np.random.Generator:
    """Per-sample generator derived from (master seed, counter)."""
    return np.random.default_rng([int(master_seed), int(counter)])


def _ginibre(rng, dim: int, diagonal: bool) -> np.ndarray:
    if diagonal:
        return np.diag(rng.normal(size=dim) + 1j * rng.normal(size=dim))
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


@dataclass(eq=False)
class OperatorPair:
    X: np.ndarray
    Y: np.ndarray
    provenance: str = "algebraic"
    dim_a: int | None = None
    dim_lambda: int | None = None
    seed: object = None
    params: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.X.shape[0]

    @cached_property
    def p(self) -> float:
        """Trace norm of X (X is PSD, so its trace)."""
        return float(np.sum(np.clip(np.linalg.eigvalsh(self.X), 0.0, None)))

    @cached_property
    def y_eig(self) -> HermitianEig:
        e = eigh(self.Y)
        return HermitianEig(np.clip(e.eigenvalues, 0.0, None), e.eigenvectors)

    def y_power(self, s: float, floor: float | None = EPS_FLOOR) -> np.ndarray:
        w, U = self.y_eig
        if s < 0:
            w = floored_values(w, floor, "negative power")
        return (U * w**s) @ U.conj().T

    def y_log(self, floor: float | None = EPS_FLOOR) -> np.ndarray:
        w, U = self.y_eig
        return (U * np.log(floored_values(w, floor, "log"))) @ U.conj().T

    def tr_y_power(self, alpha: float) -> float:
        return float(math.fsum(self.y_eig.eigenvalues**alpha))

    def ordering_margins(self) -> tuple[float, float, float]:
        """Smallest eigenvalues of X, Y - X and I - Y."""
        e = lambda M: float(np.linalg.eigvalsh(0.5 * (M + M.conj().T))[0])
        return e(self.X), e(self.Y - self.X), e(np.eye(self.dim) - self.Y)

    def is_ordered(self, tol: float = 1e-10) -> bool:
        return all(m >= -tol for m in self.ordering_margins())

    def scaled(self, c: float) -> "OperatorPair":
        return OperatorPair(c * self.X, self.Y, self.provenance, self.dim_a, self.dim_lambda, self.seed,
                            dict(self.params, x_scale=c))


def sample_pair_algebraic(
    dim: int,
    seed=None,
    *,
    u: float | None = None,
    v: float | None = None,
    commuting: bool = False,
) -> OperatorPair:
    """Y = G^dag G scaled to norm u; X = Y^{1/2} K Y^{1/2} with K = v W^dag W / ||W^dag W||.

    u and v default to uniform draws on (0, 1]; ``commuting`` uses diagonal G, W.
    """
    if dim < 2:
        raise InequalityError("dimension must be >= 2")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    if u is None:
        u = 1.0 - rng.uniform()
    if v is None:
        v = 1.0 - rng.uniform()
    G = _ginibre(rng, dim, commuting)
    W = _ginibre(rng, dim, commuting)
    Y = G.conj().T @ G
    Y = 0.5 * (Y + Y.conj().T)
    Y *= u / np.linalg.eigvalsh(Y)[-1]
    K = W.conj().T @ W
    K = 0.5 * (K + K.conj().T)
    K *= v / np.linalg.eigvalsh(K)[-1]
    w, U = np.linalg.eigh(Y)
    Yh = (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T
    Xm = Yh @ K @ Yh
    Xm = 0.5 * (Xm + Xm.conj().T)
    return OperatorPair(Xm, Y, "algebraic", seed=seed if not isinstance(seed, np.random.Generator) else None,
                        params={"u": float(u), "v": float(v), "commuting": commuting})


def sample_pair_physical(dim_a: int, dim_lambda: int, seed=None, cap: int = PAIR_CAP) -> OperatorPair:
    """X = p rho_{A Lambda}, Y = sqrt(p) rho_A x I_Lambda, p = dim_lambda^-2.

    rho_{A Lambda} is the marginal of a Haar-random pure state on
    A + Lambda + purifier, the purifier having dimension dim_a * dim_lambda.
    """
    if dim_a < 1 or dim_lambda < 2:
        raise InequalityError("need dim_a >= 1 and dim_lambda >= 2")
    n = dim_a * dim_lambda
    if n > cap:
        raise InequalityError(f"pair dimension {n} exceeds cap {cap}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    psi = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    psi /= np.linalg.norm(psi)
    rho = psi @ psi.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho_a = np.einsum("ajbj->ab", rho.reshape(dim_a, dim_lambda, dim_a, dim_lambda))
    p = dim_lambda**-2.0
    Xm = p * rho
    Y = math.sqrt(p) * np.kron(rho_a, np.eye(dim_lambda))
    return OperatorPair(Xm, Y, "physical", dim_a, dim_lambda,
                        seed=seed if not isinstance(seed, np.random.Generator) else None)


@dataclass(frozen=True)
class CheckReport:
    checker: str
    alpha: float | None
    lhs: float
    rhs: float
    tol: float

    @property
    def margin(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.margin >= -self.tol


def trace_norm_fsum(M: np.ndarray) -> float:
    return float(math.fsum(np.linalg.svd(M, compute_uv=False)))


def _tol(rhs: float) -> float:
    return VIOLATION_TOL * max(1.0, abs(rhs))


def _require_alpha_gt1(alpha: float):
    if not alpha > 1:
        raise InequalityError(f"checker needs alpha > 1, got {alpha}")


def _require_p(p: float):
    if not 0.0 < p < 1.0:
        raise InequalityError(f"checker needs p = ||X||_1 in (0, 1), got {p}")


def check_lemma_alpha_gt1(pair: OperatorPair, alpha: float) -> CheckReport:
    """||X Y^{alpha-1}||_1 <= Tr Y^alpha."""
    _require_alpha_gt1(alpha)
    lhs = trace_norm_fsum(pair.X @ pair.y_power(alpha - 1.0))
    rhs = pair.tr_y_power(alpha)
    return CheckReport("lemma_alpha_gt1", alpha, lhs, rhs, _tol(rhs))


def check_lemma_trace_constrained(pair: OperatorPair, alpha: float) -> CheckReport:
    """||X Y^{alpha-1}||_1 <= p (Tr Y^alpha)^{(alpha-1)/alpha} with p = ||X||_1."""
    _require_alpha_gt1(alpha)
    lhs = trace_norm_fsum(pair.X @ pair.y_power(alpha - 1.0))
    rhs = pair.p * pair.tr_y_power(alpha) ** ((alpha - 1.0) / alpha)
    return CheckReport("lemma_trace_constrained", alpha, lhs, rhs, _tol(rhs))


def vershynina_log_rhs(p: float, prefactor: float = 9.0) -> float:
    return prefactor * min(p * math.log(1.0 / p), (1.0 - p) * math.log(1.0 / (1.0 - p)))


def vershynina_power_rhs(p: float, alpha: float, prefactor: float = 9.0) -> float:
    if alpha < 2:
        return prefactor * (1.0 - p) * (1.0 - (1.0 - p) ** (alpha - 1.0))
    return prefactor * p * (1.0 - p) ** (alpha - 1.0)


def check_vershynina_log(pair: OperatorPair, prefactor: float = 9.0,
                         floor: float | None = EPS_FLOOR) -> CheckReport:
    """||[X, log Y]||_1 <= 9 min(p log 1/p, (1-p) log 1/(1-p))."""
    p = pair.p
    _require_p(p)
    L = pair.y_log(floor)
    lhs = trace_norm_fsum(pair.X @ L - L @ pair.X)
    rhs = vershynina_log_rhs(p, prefactor)
    return CheckReport("vershynina_log", 1.0, lhs, rhs, _tol(rhs))


def check_vershynina_power(pair: OperatorPair, alpha: float, prefactor: float = 9.0) -> CheckReport:
    """||[X, Y^{alpha-1}]||_1 against the 1<alpha<2 / alpha>=2 branches."""
    _require_alpha_gt1(alpha)
    p = pair.p
    _require_p(p)
    P = pair.y_power(alpha - 1.0)
    lhs = trace_norm_fsum(pair.X @ P - P @ pair.X)
    rhs = vershynina_power_rhs(p, alpha, prefactor)
    return CheckReport("vershynina_power", alpha, lhs, rhs, _tol(rhs))


# -- alpha < 1 counterexample search ---------------------------------------

@dataclass
class Witness:
    pair: OperatorPair
    alpha: float
    lhs: float
    rhs: float
    floor_margins: dict

    @property
    def relative_violation(self) -> float:
        return (self.lhs - self.rhs) / self.rhs


@dataclass
class SearchReport:
    alpha: float
    samples: int
    violations: int
    min_relative_margin: float
    witness: Witness | None = None
    witnesses: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.witness is not None

    @property
    def frequency(self) -> float:
        return self.violations / self.samples if self.samples else 0.0


def alpha_lt1_margin(pair: OperatorPair, alpha: float, floor: float) -> tuple[float, float]:
    lhs = trace_norm_fsum(pair.X @ pair.y_power(alpha - 1.0, floor))
    rhs = pair.tr_y_power(alpha)
    return lhs, rhs


def search_alpha_lt1_counterexample(
    dim_range: Sequence[int] = (3, 8),
    alpha: float = 0.5,
    max_samples: int = 10_000,
    seed: int = 0,
    *,
    floors: Iterable[float] = (1e-10, 1e-12, 1e-14),
    stop_at_first: bool = True,
    commuting: bool = False,
) -> SearchReport:
    """Look for algebraic pairs with ||X Y^{alpha-1}||_1 > Tr Y^alpha.

    A candidate beyond 1e-9 is re-verified at 1e-12 with compensated
    summation under every eigenvalue floor in ``floors``; only candidates
    that violate under all of them count.
    """
    if not 0 < alpha < 1:
        raise InequalityError(f"search needs 0 < alpha < 1, got {alpha}")
    lo, hi = int(dim_range[0]), int(dim_range[1])
    floors = tuple(floors)
    report = SearchReport(alpha, 0, 0, math.inf)
    for i in range(max_samples):
        rng = sample_rng(seed, i)
        dim = int(rng.integers(lo, hi + 1))
        pair = sample_pair_algebraic(dim, rng, commuting=commuting)
        pair.seed = (seed, i)
        lhs, rhs = alpha_lt1_margin(pair, alpha, EPS_FLOOR)
        report.samples += 1
        report.min_relative_margin = min(report.min_relative_margin, (rhs - lhs) / rhs)
        if lhs <= rhs + VIOLATION_TOL:
            continue
        margins = {f: alpha_lt1_margin(pair, alpha, f) for f in floors}
        if not all(l > r * (1 + WITNESS_TOL) for l, r in margins.values()):
            continue
        w = Witness(pair, alpha, lhs, rhs, {f: r - l for f, (l, r) in margins.items()})
        report.violations += 1
        report.witnesses.append(w)
        if report.witness is None:
            report.witness = w
        if stop_at_first:
            break
    return report


# -- fuzz campaign ------------------------------------------------------------

CAMPAIGN_HEADER = ("checker", "alpha", "dim", "provenance", "seed", "lhs", "rhs", "margin", "holds")


@dataclass
class CampaignRow:
    checker: str
    alpha: float
    dim: int
    provenance: str
    seed: int
    lhs: float
    rhs: float
    margin: float
    holds: bool

    def as_tuple(self):
        return (self.checker, self.alpha, self.dim, self.provenance, self.seed,
                self.lhs, self.rhs, self.margin, self.holds)


@dataclass
class CampaignSummary:
    rows: list
    min_margin: dict
    violations: dict
    checks: dict
    probes: dict

    @property
    def total_violations(self) -> int:
        return sum(self.violations.values())


def physical_dims(rng, dim_range: Sequence[int]) -> tuple[int, int]:
    lo, hi = dim_range
    while True:
        dl = int(rng.integers(2, 5))
        da = int(rng.integers(1, hi // dl + 1))
        if lo <= da * dl <= hi:
            return da, dl


def run_fuzz_campaign(
    n_pairs: int = 10_000,
    alphas: Sequence[float] = DEFAULT_ALPHAS,
    dim_range: Sequence[int] = (2, 16),
    seed: int = 0,
    physical_fraction: float = 0.5,
) -> CampaignSummary:
    """Run every alpha > 1 checker over a mixed algebraic/physical pair stream.

    Lemma checks run on every pair. The Vershynina checks run on physical
    pairs, the only construction they are stated for; on algebraic pairs with
    p = Tr X < 1 they are evaluated as a probe and tallied separately, as is a
    probe of the log inequality with prefactor 2 instead of 9.
    """
    if n_pairs <= 0:
        raise InequalityError("campaign needs at least one pair")
    rows: list[CampaignRow] = []
    probes = {"vershynina_algebraic_checked": 0, "vershynina_algebraic_violations": 0,
              "vershynina_log_prefactor2_checked": 0, "vershynina_log_prefactor2_violations": 0}
    for i in range(n_pairs):
        rng = sample_rng(seed, i)
        if rng.uniform() < physical_fraction:
            da, dl = physical_dims(rng, dim_range)
            pair = sample_pair_physical(da, dl, rng)
        else:
            pair = sample_pair_algebraic(int(rng.integers(dim_range[0], dim_range[1] + 1)), rng)
        reports = []
        for a in alphas:
            reports.append(check_lemma_alpha_gt1(pair, a))
            reports.append(check_lemma_trace_constrained(pair, a))
        vers = []
        if 0.0 < pair.p < 1.0:
            vers.append(check_vershynina_log(pair))
            vers.extend(check_vershynina_power(pair, a) for a in alphas)
        if pair.provenance == "physical":
            reports.extend(vers)
            r2 = check_vershynina_log(pair, prefactor=2.0)
            probes["vershynina_log_prefactor2_checked"] += 1
            probes["vershynina_log_prefactor2_violations"] += int(not r2.holds)
        else:
            probes["vershynina_algebraic_checked"] += len(vers)
            probes["vershynina_algebraic_violations"] += sum(not r.holds for r in vers)
        for r in reports:
            rows.append(CampaignRow(r.checker, r.alpha, pair.dim, pair.provenance, i,
                                    r.lhs, r.rhs, r.margin, r.holds))
    min_margin: dict[str, float] = {}
    violations: dict[str, int] = {}
    checks: dict[str, int] = {}
    for r in rows:
        min_margin[r.checker] = min(min_margin.get(r.checker, math.inf), r.margin)
        violations[r.checker] = violations.get(r.checker, 0) + (not r.holds)
        checks[r.checker] = checks.get(r.checker, 0) + 1
    return CampaignSummary(rows, min_margin, violations, checks, probes)
