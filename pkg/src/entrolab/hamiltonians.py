"""Term-structured Hamiltonians: MFIM chain, SYK dot, GUE samples.

A model is a list of terms. Each term keeps a compact per-site factor list
and only expands to a dense matrix on demand, so boundary counting on large
SYK dots never materializes the operators.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .linalg import Bipartition, LinalgError, operator_norm

DIM_CAP = 4096

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


class ModelError(ValueError):
    pass


def _is_identity_like(m: np.ndarray) -> bool:
    return np.allclose(m, m[0, 0] * np.eye(m.shape[0]), atol=1e-14) and abs(m[0, 0]) > 0


@dataclass(frozen=True, eq=False)
class Term:
    """coefficient * scale * (tensor product of site factors), identity elsewhere."""

    label: str
    coefficient: float
    factors: tuple[tuple[int, np.ndarray], ...]
    scale: float = 1.0
    modes: tuple[int, ...] = ()

    @property
    def support(self) -> frozenset[int]:
        return frozenset(s for s, m in self.factors if not _is_identity_like(m))

    @property
    def diameter(self) -> int:
        sup = self.support
        return max(sup) - min(sup) if sup else 0

    @property
    def operator_norm(self) -> float:
        """Norm of the operator without the coefficient."""
        n = abs(self.scale)
        for _, m in self.factors:
            n *= operator_norm(m)
        return n

    @property
    def norm(self) -> float:
        return abs(self.coefficient) * self.operator_norm

    def operator(self, site_dims: Sequence[int]) -> np.ndarray:
        mats = {s: m for s, m in self.factors}
        out = np.ones((1, 1), dtype=np.complex128)
        for s, d in enumerate(site_dims):
            out = np.kron(out, mats.get(s, np.eye(d, dtype=np.complex128)))
        return self.scale * out

    def dense(self, site_dims: Sequence[int]) -> np.ndarray:
        return self.coefficient * self.operator(site_dims)


@dataclass(frozen=True)
class Lattice:
    site_count: int
    onsite_dim: int
    spatial_dim: int = 1
    metric: str = "chain"

    @property
    def site_dims(self) -> tuple[int, ...]:
        return (self.onsite_dim,) * self.site_count

    @property
    def dim(self) -> int:
        return self.onsite_dim ** self.site_count


@dataclass(eq=False)
class HamiltonianModel:
    name: str
    terms: tuple[Term, ...]
    lattice: Lattice
    params: dict = field(default_factory=dict)
    _dense: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.terms = tuple(self.terms)
        for t in self.terms:
            for s, m in t.factors:
                if not 0 <= s < self.lattice.site_count:
                    raise ModelError(f"term {t.label} acts on site {s} outside the lattice")
                if m.shape != (self.lattice.onsite_dim,) * 2:
                    raise ModelError(f"term {t.label} has factor of shape {m.shape}")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def hbar(self) -> float:
        """Largest single-term norm |coefficient| * ||operator||."""
        return max((t.norm for t in self.terms), default=0.0)

    @property
    def site_dims(self) -> tuple[int, ...]:
        return self.lattice.site_dims

    @property
    def dim(self) -> int:
        return self.lattice.dim

    def nonvanishing_count(self) -> int:
        return sum(1 for t in self.terms if t.coefficient != 0.0)

    def subset(self, terms: Iterable[Term], suffix: str) -> "HamiltonianModel":
        return HamiltonianModel(f"{self.name}{suffix}", tuple(terms), self.lattice, dict(self.params))

    def dense(self, cap: int | None = DIM_CAP) -> np.ndarray:
        if self._dense is None:
            self._dense = assemble_dense(self, cap)
        return self._dense

    def to_text(self) -> str:
        lat = self.lattice
        lines = [
            f"model {self.name}",
            f"lattice spatial_dim={lat.spatial_dim} site_count={lat.site_count} "
            f"onsite_dim={lat.onsite_dim} metric={lat.metric}",
        ]
        for k in sorted(self.params):
            lines.append(f"param {k}={self.params[k]!r}")
        lines.append(f"hbar {self.hbar!r}")
        lines.append(f"terms {len(self.terms)}")
        for t in self.terms:
            sup = ",".join(str(s) for s in sorted(t.support))
            lines.append(
                f"{t.label}\t{t.coefficient * t.scale!r}\tsupport={sup}\tdiameter={t.diameter}"
            )
        return "\n".join(lines) + "\n"


def assemble_dense(model: HamiltonianModel, cap: int | None = DIM_CAP) -> np.ndarray:
    D = model.dim
    if cap is not None and D > cap:
        raise ModelError(f"Hilbert-space dimension {D} exceeds cap {cap}")
    H = np.zeros((D, D), dtype=np.complex128)
    dims = model.site_dims
    for t in model.terms:
        if t.coefficient != 0.0:
            H += t.dense(dims)
    return H


def split_terms(model: HamiltonianModel, part: Bipartition):
    """Return (boundary, inside_A, inside_complement) term tuples."""
    if part.site_dims != model.site_dims:
        raise ModelError("bipartition does not match the model's lattice")
    a = set(part.a_sites)
    boundary, in_a, in_b = [], [], []
    for t in model.terms:
        sup = t.support
        hits_a = bool(sup & a)
        hits_b = bool(sup - a)
        if hits_a and hits_b:
            boundary.append(t)
        elif hits_a:
            in_a.append(t)
        else:
            in_b.append(t)
    return tuple(boundary), tuple(in_a), tuple(in_b)


def extract_boundary(model: HamiltonianModel, part: Bipartition) -> HamiltonianModel:
    """Terms whose support meets both A and its complement (H_boundary)."""
    boundary, _, _ = split_terms(model, part)
    return model.subset(boundary, "[boundary]")


def boundary_term_count(model: HamiltonianModel, part: Bipartition) -> int:
    """Number of distinct nonvanishing boundary terms, V(H_boundary).

    The SYK discussion calls the same count S(H_boundary).
    """
    return extract_boundary(model, part).nonvanishing_count()


def build_mfim(L: int, g: float = -1.05, h: float = 0.5, J: float = 1.0) -> HamiltonianModel:
    """Open-chain mixed-field Ising model g sum X_i + h sum Z_i + J sum Z_i Z_{i+1}."""
    if L < 2:
        raise ModelError(f"MFIM needs L >= 2, got {L}")
    terms = []
    for i in range(L):
        terms.append(Term(f"X{i}", float(g), ((i, X),)))
    for i in range(L):
        terms.append(Term(f"Z{i}", float(h), ((i, Z),)))
    for i in range(L - 1):
        terms.append(Term(f"ZZ{i},{i + 1}", float(J), ((i, Z), (i + 1, Z))))
    return HamiltonianModel("mfim", tuple(terms), Lattice(L, 2), {"L": L, "g": g, "h": h, "J": J})


def sample_gue(D: int, seed: int | None = None) -> np.ndarray:
    """GUE matrix with density ~ exp(-D/2 Tr H^2); spectrum fills [-2, 2]."""
    if D < 2:
        raise ModelError(f"GUE dimension must be >= 2, got {D}")
    rng = np.random.default_rng(seed)
    diag = rng.normal(scale=math.sqrt(1.0 / D), size=D)
    iu = np.triu_indices(D, 1)
    off = rng.normal(scale=math.sqrt(0.5 / D), size=(2, iu[0].size))
    H = np.zeros((D, D), dtype=np.complex128)
    H[iu] = off[0] + 1j * off[1]
    H = H + H.conj().T
    H[np.diag_indices(D)] = diag
    return H


# Jordan-Wigner Majoranas, 0-based: chi_{2j} = Z_0..Z_{j-1} X_j / sqrt2,
# chi_{2j+1} = Z_0..Z_{j-1} Y_j / sqrt2, so {chi_a, chi_b} = delta_ab.

def majorana_factors(a: int) -> dict[int, np.ndarray]:
    j, kind = divmod(a, 2)
    f = {q: Z for q in range(j)}
    f[j] = Y if kind else X
    return f


def majorana_operators(n_qubits: int) -> list[np.ndarray]:
    ops = []
    for a in range(2 * n_qubits):
        f = majorana_factors(a)
        M = np.ones((1, 1), dtype=np.complex128)
        for q in range(n_qubits):
            M = np.kron(M, f.get(q, I2))
        ops.append(M / math.sqrt(2))
    return ops


def _pauli_decompose(m: np.ndarray) -> tuple[complex, str]:
    for name, P in PAULIS.items():
        lam = np.trace(P.conj().T @ m) / 2
        if abs(lam) > 1e-12 and np.allclose(m, lam * P, atol=1e-12):
            return complex(lam), name
    raise ModelError("per-site factor is not a scaled Pauli matrix")


def majorana_product_term(modes: Sequence[int], coefficient: float, n_qubits: int) -> Term:
    """Term coefficient * chi_{m0} chi_{m1} ... as a Hermitian Pauli string times a real scale."""
    per_site: dict[int, np.ndarray] = {}
    for a in modes:
        for q, f in majorana_factors(a).items():
            per_site[q] = per_site.get(q, I2) @ f
    phase = complex(2.0 ** (-len(modes) / 2))
    factors = []
    for q in sorted(per_site):
        lam, name = _pauli_decompose(per_site[q])
        phase *= lam
        if name != "I":
            factors.append((q, PAULIS[name]))
    if abs(phase.imag) > 1e-12:
        # odd-Hermiticity products: rotate by i so the stored operator is Hermitian
        phase *= -1j
    label = "chi" + ".".join(str(a) for a in modes)
    return Term(label, float(coefficient), tuple(factors), float(phase.real), tuple(modes))


def build_syk_dot(N: int, J: float = 1.0, seed: int | None = None) -> HamiltonianModel:
    """SYK_4 dot on N Majoranas (N/2 qubits), one term per i<j<k<l.

    Couplings are i.i.d. normal with variance 3! J^2 / N^3.
    """
    if N % 2 or N < 4:
        raise ModelError(f"SYK needs an even Majorana count >= 4, got {N}")
    n_qubits = N // 2
    rng = np.random.default_rng(seed)
    quads = list(itertools.combinations(range(N), 4))
    sigma = math.sqrt(6.0 * J * J / N**3)
    couplings = rng.normal(scale=sigma, size=len(quads))
    terms = tuple(
        majorana_product_term(q, c, n_qubits) for q, c in zip(quads, couplings)
    )
    return HamiltonianModel(
        "syk", terms, Lattice(n_qubits, 2), {"N": N, "J": J, "seed": seed}
    )


def majorana_boundary_count(model: HamiltonianModel, a_modes: Iterable[int]) -> int:
    """Count terms whose Majorana set meets both sides of a Majorana split."""
    a = set(a_modes)
    return sum(
        1
        for t in model.terms
        if t.coefficient != 0.0 and (set(t.modes) & a) and (set(t.modes) - a)
    )


def check_dim(D: int, cap: int | None) -> None:
    if cap is not None and D > cap:
        raise LinalgError(f"dimension {D} exceeds cap {cap}")
