"""States, exact evolution, entropy functionals and entropy growth rates."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .hamiltonians import DIM_CAP, HamiltonianModel, extract_boundary
from .linalg import (
    EPS_FLOOR,
    Bipartition,
    HermitianEig,
    as_matrix,
    eigh,
    embed_left,
    floored_values,
    partial_trace,
    reduced_density_from_vector,
)

NORM_TOL = 1e-10


class DynamicsError(ValueError):
    pass


def normalize(psi) -> np.ndarray:
    v = np.asarray(psi, dtype=np.complex128).reshape(-1)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0:
        raise DynamicsError("cannot normalize a zero or non-finite vector")
    return v / n


def is_pure(state: np.ndarray) -> bool:
    return np.ndim(state) == 1


def haar_product_state(L: int, d0: int = 2, seed=None, cap: int | None = DIM_CAP) -> np.ndarray:
    """Tensor product of L independent Haar-random single-site states."""
    if cap is not None and d0**L > cap:
        raise DynamicsError(f"dimension {d0}**{L} exceeds cap {cap}")
    rng = np.random.default_rng(seed)
    psi = np.ones(1, dtype=np.complex128)
    for _ in range(L):
        v = rng.normal(size=d0) + 1j * rng.normal(size=d0)
        psi = np.kron(psi, v / np.linalg.norm(v))
    return psi


def basis_state(bits: Sequence[int], d0: int = 2) -> np.ndarray:
    idx = 0
    for b in bits:
        idx = idx * d0 + int(b)
    psi = np.zeros(d0 ** len(bits), dtype=np.complex128)
    psi[idx] = 1.0
    return psi


def spin_string_state(s: Sequence[int]) -> np.ndarray:
    """Basis state with (2 n_j - 1)|s> = s_j |s>; s_j = +1 means qubit j occupied (|1>)."""
    if any(x not in (1, -1) for x in s):
        raise DynamicsError("spin string entries must be +1 or -1")
    return basis_state([1 if x == 1 else 0 for x in s])


class EvolutionEngine:
    """Exact e^{-iHt} through one spectral decomposition of H."""

    def __init__(self, H, cap: int | None = DIM_CAP):
        if isinstance(H, HamiltonianModel):
            H = H.dense(cap)
        H = as_matrix(H, square=True)
        if cap is not None and H.shape[0] > cap:
            raise DynamicsError(f"dimension {H.shape[0]} exceeds cap {cap}")
        self.H = H
        self.eig: HermitianEig = eigh(H)
        self.dim = H.shape[0]

    @property
    def energies(self) -> np.ndarray:
        return self.eig.eigenvalues

    def _check(self, state):
        if state.shape[0] != self.dim:
            raise DynamicsError(f"state dimension {state.shape[0]} != {self.dim}")

    def evolve(self, state, t: float) -> np.ndarray:
        state = np.asarray(state, dtype=np.complex128)
        self._check(state)
        U = self.eig.eigenvectors
        ph = np.exp(-1j * self.energies * t)
        if state.ndim == 1:
            return U @ (ph * (U.conj().T @ state))
        Ut = (U * ph) @ U.conj().T
        return Ut @ state @ Ut.conj().T

    def trajectory(self, psi, times) -> np.ndarray:
        """Pure-state trajectory as a (D, T) array."""
        psi = np.asarray(psi, dtype=np.complex128)
        self._check(psi)
        U = self.eig.eigenvectors
        c = U.conj().T @ psi
        ph = np.exp(-1j * np.outer(self.energies, np.asarray(times, dtype=float)))
        return U @ (ph * c[:, None])

    def imaginary_time(self, psi, beta: float) -> np.ndarray:
        """Normalized e^{-beta H/2} psi, shifted by the ground energy to avoid overflow."""
        if beta < 0:
            raise DynamicsError("beta must be >= 0")
        U = self.eig.eigenvectors
        w = np.exp(-0.5 * beta * (self.energies - self.energies[0]))
        return normalize(U @ (w * (U.conj().T @ np.asarray(psi, dtype=np.complex128))))


def build_km_state(model: HamiltonianModel | EvolutionEngine, s: Sequence[int], beta: float) -> np.ndarray:
    """Kourkoulou-Maldacena state e^{-beta H/2}|s>, normalized."""
    if beta < 0:
        raise DynamicsError("beta must be >= 0")
    engine = model if isinstance(model, EvolutionEngine) else EvolutionEngine(model)
    psi = spin_string_state(s)
    if psi.shape[0] != engine.dim:
        raise DynamicsError("spin string length does not match the qubit count")
    if beta == 0:
        return psi
    return engine.imaginary_time(psi, beta)


def reduced_spectrum(state, part: Bipartition) -> np.ndarray:
    """Eigenvalues of rho_A, clipped at zero."""
    state = np.asarray(state, dtype=np.complex128)
    if state.ndim == 1:
        s = np.linalg.svd(part.split_vector(state), compute_uv=False)
        return s**2
    w = np.linalg.eigvalsh(partial_trace(state, part, "A"))
    return np.clip(w, 0.0, None)


def reduced_spectra(traj: np.ndarray, part: Bipartition) -> np.ndarray:
    """Schmidt spectra for every column of a (D, T) trajectory, shape (T, min(D_A, D_B))."""
    M = part.split_vector(traj)
    s = np.linalg.svd(np.moveaxis(M, -1, 0), compute_uv=False)
    return s**2


def renyi_from_spectrum(p: np.ndarray, alpha: float) -> np.ndarray:
    """Renyi entropy (natural log) along the last axis of a probability array."""
    if not alpha > 0:
        raise DynamicsError(f"Renyi index must be > 0, got {alpha}")
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    if alpha == 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(p > 0, -p * np.log(np.where(p > 0, p, 1.0)), 0.0)
        return terms.sum(axis=-1)
    if np.isinf(alpha):
        return -np.log(p.max(axis=-1))
    return np.log(np.sum(p**alpha, axis=-1)) / (1.0 - alpha)


def renyi_entropy(state, part: Bipartition, alpha: float) -> float:
    if not alpha > 0:
        raise DynamicsError(f"Renyi index must be > 0, got {alpha}")
    return float(renyi_from_spectrum(reduced_spectrum(state, part), alpha))


def tsallis_entropy(state, part: Bipartition, q: float) -> float:
    if not q > 0 or q == 1:
        raise DynamicsError(f"Tsallis index must be > 0 and != 1, got {q}")
    p = reduced_spectrum(state, part)
    return float((1.0 - np.sum(p**q)) / (q - 1.0))


def _hamiltonian_matrix(H, part: Bipartition, boundary_only: bool) -> np.ndarray:
    if isinstance(H, HamiltonianModel):
        model = extract_boundary(H, part) if boundary_only else H
        return model.dense(None)
    if boundary_only:
        raise DynamicsError("boundary extraction needs a term-structured model")
    return as_matrix(H, square=True)


def _rho_a_function(rho_a: np.ndarray, alpha: float, floor: float | None):
    """Return (f(rho_A), Tr rho_A^alpha) with f = rho^{alpha-1} or log rho."""
    w, U = np.linalg.eigh(0.5 * (rho_a + rho_a.conj().T))
    w = np.clip(w, 0.0, None)
    if alpha == 1:
        fw = np.log(floored_values(w, floor, "log"))
        tr = 1.0
    else:
        s = alpha - 1.0
        fw = floored_values(w, floor, "negative power") ** s if s < 0 else w**s
        tr = float(np.sum(w**alpha))
    return (U * fw) @ U.conj().T, tr


def entropy_rate_analytic(
    H,
    state,
    part: Bipartition,
    alpha: float,
    *,
    boundary_only: bool = False,
    floor: float | None = EPS_FLOOR,
) -> float:
    """Signed dS_alpha/dt from the commutator-trace formula.

    dS/dt = i alpha/(alpha-1) Tr(H [rho, rho_A^{alpha-1} x I]) / Tr rho_A^alpha
    for alpha != 1 and i Tr(H [rho, log rho_A x I]) at alpha = 1, under
    rho(t) = e^{-iHt} rho e^{iHt}. With ``boundary_only`` the model is first
    reduced to its boundary terms, which leaves the value unchanged.
    """
    if not alpha > 0:
        raise DynamicsError(f"Renyi index must be > 0, got {alpha}")
    Hm = _hamiltonian_matrix(H, part, boundary_only)
    state = np.asarray(state, dtype=np.complex128)
    if state.shape[0] != Hm.shape[0]:
        raise DynamicsError("state and Hamiltonian dimensions differ")
    pref = 1.0 if alpha == 1 else alpha / (alpha - 1.0)
    if state.ndim == 1:
        F, tr = _rho_a_function(reduced_density_from_vector(state, part), alpha, floor)
        # Tr(H[rho, M]) = 2i Im <psi|M H|psi> for rho = |psi><psi|
        Hpsi = Hm @ state
        Mpsi = part.merge_vector(F @ part.split_vector(state))
        z = np.vdot(Mpsi, Hpsi)
        return float(-2.0 * pref * z.imag / tr)
    rho = as_matrix(state, square=True)
    F, tr = _rho_a_function(partial_trace(rho, part, "A"), alpha, floor)
    M = embed_left(F, part)
    val = np.trace(Hm @ (rho @ M - M @ rho))
    return float((1j * pref * val / tr).real)


def entropy_rate_fd(
    engine: EvolutionEngine, psi, part: Bipartition, alpha: float, t: float, delta: float = 1e-4
) -> float:
    """Central difference (S(t+delta) - S(t-delta)) / (2 delta)."""
    if not delta > 0:
        raise DynamicsError("delta must be > 0")
    plus = renyi_entropy(engine.evolve(psi, t + delta), part, alpha)
    minus = renyi_entropy(engine.evolve(psi, t - delta), part, alpha)
    return (plus - minus) / (2.0 * delta)


@dataclass
class EntropyCurve:
    times: np.ndarray
    alpha: float
    values: np.ndarray
    stderr: np.ndarray
    ensemble_size: int
    seeds: tuple = ()

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        self.stderr = np.asarray(self.stderr, dtype=float)


@dataclass
class GrowthExperiment:
    """Ensemble of quenches.

    ``hamiltonian`` is either fixed (matrix, model or engine) or a callable
    ``seed -> matrix`` for disordered ensembles; ``state`` is a fixed vector
    or a callable ``seed -> vector``.
    """

    hamiltonian: object
    state: object
    seeds: Sequence[int]
    times: Sequence[float]
    alphas: Sequence[float]
    part: Bipartition
    jobs: int = 1
    cap: int | None = DIM_CAP
    keep_samples: bool = False
    samples: dict = field(default_factory=dict, init=False, repr=False)


def _engine_for(exp: GrowthExperiment, seed) -> EvolutionEngine:
    H = exp.hamiltonian
    if isinstance(H, EvolutionEngine):
        return H
    if callable(H) and not isinstance(H, HamiltonianModel):
        return EvolutionEngine(H(seed), exp.cap)
    return EvolutionEngine(H, exp.cap)


def run_growth_experiment(exp: GrowthExperiment) -> dict[float, EntropyCurve]:
    """Ensemble-mean entropy curves per alpha, with per-time standard errors."""
    seeds = list(exp.seeds)
    if not seeds:
        raise DynamicsError("empty ensemble")
    times = np.asarray(exp.times, dtype=float)
    alphas = [float(a) for a in exp.alphas]
    shared = None
    if not (callable(exp.hamiltonian) and not isinstance(exp.hamiltonian, (HamiltonianModel, EvolutionEngine))):
        shared = _engine_for(exp, None)

    def one(seed):
        engine = shared if shared is not None else _engine_for(exp, seed)
        psi = exp.state(seed) if callable(exp.state) else exp.state
        spectra = reduced_spectra(engine.trajectory(normalize(psi), times), exp.part)
        return np.stack([renyi_from_spectrum(spectra, a) for a in alphas])

    if exp.jobs > 1:
        with ThreadPoolExecutor(max_workers=exp.jobs) as pool:
            results = list(pool.map(one, seeds))
    else:
        results = [one(s) for s in seeds]
    data = np.stack(results)  # (n_seeds, n_alpha, T)
    if exp.keep_samples:
        exp.samples = {a: data[:, i, :] for i, a in enumerate(alphas)}
    n = len(seeds)
    mean = data.mean(axis=0)
    err = data.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    return {
        a: EntropyCurve(times, a, mean[i], err[i], n, tuple(seeds))
        for i, a in enumerate(alphas)
    }


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    residual: float
    window: tuple[float, float]
    hbar: float = 1.0
    d0: int = 2

    @property
    def v_e(self) -> float:
        """Entanglement velocity slope / (hbar log d0)."""
        return self.slope / (self.hbar * math.log(self.d0))


def saturation_time(times, values, level: float = 0.9, tail: float = 0.1) -> float:
    """First time the curve reaches ``level`` of its plateau (mean of the last ``tail`` fraction)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    k = max(1, int(round(tail * len(values))))
    plateau = values[-k:].mean()
    hit = np.nonzero(values >= level * plateau)[0]
    return float(times[hit[0]] if hit.size else times[-1])


def default_fit_window(times, values) -> tuple[float, float]:
    """(0.2, 0.7) x saturation time; the whole grid for flat curves or windows under 3 points."""
    times = np.asarray(times, dtype=float)
    ts = saturation_time(times, values)
    t1, t2 = 0.2 * ts, 0.7 * ts
    inside = np.count_nonzero((times >= t1 - 1e-12) & (times <= t2 + 1e-12))
    if inside < 3:
        return float(times[0]), float(times[-1])
    return t1, t2


def fit_linear_window(times, values, window=None, hbar: float = 1.0, d0: int = 2) -> LinearFit:
    """Least-squares line through the points with t inside ``window``."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if window is None:
        window = default_fit_window(times, values)
    t1, t2 = map(float, window)
    if t1 < times[0] - 1e-12 or t2 > times[-1] + 1e-12 or t1 >= t2:
        raise DynamicsError(f"fit window {window} outside the time grid")
    mask = (times >= t1 - 1e-12) & (times <= t2 + 1e-12)
    if mask.sum() < 3:
        raise DynamicsError("fit window holds fewer than 3 grid points")
    A = np.vstack([times[mask], np.ones(mask.sum())]).T
    coef, *_ = np.linalg.lstsq(A, values[mask], rcond=None)
    res = values[mask] - A @ coef
    return LinearFit(float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(res**2))), (t1, t2), hbar, d0)


def curves_to_rows(curves: dict[float, EntropyCurve]):
    for a in sorted(curves):
        c = curves[a]
        for t, m, e in zip(c.times, c.values, c.stderr):
            yield (a, float(t), float(m), float(e), c.ensemble_size)


CURVE_HEADER = ("alpha", "t", "mean", "stderr", "n")
