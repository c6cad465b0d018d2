"""Dense complex linear algebra shared by every other module.

Matrices are plain ``complex128`` numpy arrays. The helpers here validate
shapes and finiteness, and implement Schatten norms, partial traces and the
two spectral matrix functions (log and real powers) the entropy formulas need.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

EPS_FLOOR = 1e-12
HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-10


class LinalgError(ValueError):
    """Raised for malformed inputs or failed decompositions."""


def as_matrix(M, *, square: bool = False) -> np.ndarray:
    A = np.asarray(M, dtype=np.complex128)
    if A.ndim != 2:
        raise LinalgError(f"expected a 2-d matrix, got shape {A.shape}")
    if square and A.shape[0] != A.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise LinalgError("matrix has non-finite entries")
    return A


def hermitian_part(M: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (M + M^dag)/2, rejecting inputs that are not Hermitian to ``tol``.

    The tolerance is relative to max(1, max|M_ij|).
    """
    A = as_matrix(M, square=True)
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    asym = float(np.max(np.abs(A - A.conj().T))) if A.size else 0.0
    if asym > tol * scale:
        raise LinalgError(f"matrix is not Hermitian (asymmetry {asym:.3e})")
    return 0.5 * (A + A.conj().T)


class HermitianEig(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        U = self.eigenvectors
        return (U * self.eigenvalues) @ U.conj().T

    def apply(self, func) -> np.ndarray:
        U = self.eigenvectors
        return (U * func(self.eigenvalues)) @ U.conj().T


def eigh(M) -> HermitianEig:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    A = hermitian_part(M)
    try:
        w, U = np.linalg.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"eigendecomposition failed to converge: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(U))):
        raise LinalgError("eigendecomposition produced non-finite values")
    return HermitianEig(w, U)


def singular_values(M) -> np.ndarray:
    A = as_matrix(M)
    try:
        return np.linalg.svd(A, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise LinalgError(f"SVD failed to converge: {exc}") from exc


def schatten_norm(M, p: float = 1.0) -> float:
    """Schatten p-norm; ``p=1`` is the trace norm, ``p=np.inf`` the operator norm."""
    if not p >= 1:
        raise LinalgError(f"Schatten norm needs p >= 1, got {p}")
    s = singular_values(M)
    if s.size == 0:
        return 0.0
    if np.isinf(p):
        return float(s[0])
    if p == 1:
        return float(np.sum(s))
    # scale by the largest value so large p does not overflow
    top = s[0]
    if top == 0.0:
        return 0.0
    return float(top * np.sum((s / top) ** p) ** (1.0 / p))


def trace_norm(M) -> float:
    return schatten_norm(M, 1.0)


def operator_norm(M) -> float:
    return schatten_norm(M, np.inf)


@dataclass(frozen=True)
class Bipartition:
    """Split of the sites into A (``a_sites``) and its complement."""

    site_dims: tuple[int, ...]
    a_sites: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.site_dims)
        sites = tuple(int(s) for s in self.a_sites)
        object.__setattr__(self, "site_dims", dims)
        object.__setattr__(self, "a_sites", sites)
        n = len(dims)
        if n < 2:
            raise LinalgError("a bipartition needs at least two sites")
        if any(d < 1 for d in dims):
            raise LinalgError("site dimensions must be positive")
        if len(set(sites)) != len(sites):
            raise LinalgError("a_sites contains duplicates")
        if not sites or len(sites) >= n:
            raise LinalgError("A must be a non-empty strict subset of the sites")
        if min(sites) < 0 or max(sites) >= n:
            raise LinalgError("a_sites out of range")

    @classmethod
    def uniform(cls, n_sites: int, d: int, a_sites: Sequence[int]) -> "Bipartition":
        return cls((d,) * n_sites, tuple(a_sites))

    @classmethod
    def half_chain(cls, n_sites: int, d: int = 2) -> "Bipartition":
        return cls.uniform(n_sites, d, range(n_sites // 2))

    @property
    def n_sites(self) -> int:
        return len(self.site_dims)

    @cached_property
    def b_sites(self) -> tuple[int, ...]:
        a = set(self.a_sites)
        return tuple(s for s in range(self.n_sites) if s not in a)

    @property
    def dim_a(self) -> int:
        return int(np.prod([self.site_dims[s] for s in self.a_sites]))

    @property
    def dim_b(self) -> int:
        return int(np.prod([self.site_dims[s] for s in self.b_sites]))

    @property
    def dim(self) -> int:
        return int(np.prod(self.site_dims))

    def complement(self) -> "Bipartition":
        return Bipartition(self.site_dims, self.b_sites)

    @cached_property
    def _perm(self) -> tuple[int, ...]:
        return self.a_sites + self.b_sites

    @cached_property
    def is_contiguous_prefix(self) -> bool:
        return self.a_sites == tuple(range(len(self.a_sites)))

    def split_vector(self, psi: np.ndarray) -> np.ndarray:
        """Reshape a state vector (or a stack with time as last axis) to (D_A, D_B[, T])."""
        extra = psi.shape[1:]
        if psi.shape[0] != self.dim:
            raise LinalgError(f"state dimension {psi.shape[0]} != {self.dim}")
        if self.is_contiguous_prefix:
            return psi.reshape((self.dim_a, self.dim_b) + extra)
        t = psi.reshape(self.site_dims + extra)
        axes = self._perm + tuple(range(self.n_sites, self.n_sites + len(extra)))
        return np.transpose(t, axes).reshape((self.dim_a, self.dim_b) + extra)

    def merge_vector(self, M: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`split_vector` for a single (D_A, D_B) array."""
        if self.is_contiguous_prefix:
            return M.reshape(self.dim)
        shape = tuple(self.site_dims[s] for s in self._perm)
        t = M.reshape(shape)
        inv = np.argsort(self._perm)
        return np.transpose(t, inv).reshape(self.dim)

    def split_operator(self, M: np.ndarray) -> np.ndarray:
        """Reshape an operator to (D_A, D_B, D_A, D_B) with A sites first."""
        n = self.n_sites
        if M.shape != (self.dim, self.dim):
            raise LinalgError(f"operator shape {M.shape} does not match dimension {self.dim}")
        t = M.reshape(self.site_dims + self.site_dims)
        perm = self._perm + tuple(p + n for p in self._perm)
        return np.transpose(t, perm).reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)

    def merge_operator(self, T: np.ndarray) -> np.ndarray:
        n = self.n_sites
        shape = tuple(self.site_dims[s] for s in self._perm)
        t = T.reshape(shape + shape)
        inv = np.argsort(self._perm)
        perm = tuple(inv) + tuple(i + n for i in inv)
        return np.transpose(t, perm).reshape(self.dim, self.dim)


def partial_trace(M, part: Bipartition, keep: str = "A") -> np.ndarray:
    """Trace out one side of ``part``; ``keep`` is ``"A"`` or ``"B"`` (the complement)."""
    A = as_matrix(M, square=True)
    T = part.split_operator(A)
    if keep == "A":
        return np.einsum("ajbj->ab", T)
    if keep == "B":
        return np.einsum("iaib->ab", T)
    raise LinalgError(f"keep must be 'A' or 'B', got {keep!r}")


def reduced_density_from_vector(psi: np.ndarray, part: Bipartition, keep: str = "A") -> np.ndarray:
    M = part.split_vector(np.asarray(psi, dtype=np.complex128))
    if keep == "A":
        return M @ M.conj().T
    if keep == "B":
        return M.T @ M.conj()
    raise LinalgError(f"keep must be 'A' or 'B', got {keep!r}")


def embed_left(op_a: np.ndarray, part: Bipartition) -> np.ndarray:
    """Return op_a (on A) tensored with the identity on the complement, in site order."""
    T = np.einsum("ab,ij->aibj", op_a, np.eye(part.dim_b))
    return part.merge_operator(T)


def _clipped_spectrum(Y, tol: float = PSD_TOL) -> HermitianEig:
    e = eigh(Y)
    scale = max(1.0, float(np.max(np.abs(e.eigenvalues)))) if e.eigenvalues.size else 1.0
    if e.eigenvalues.size and e.eigenvalues[0] < -tol * scale:
        raise LinalgError(f"matrix is not PSD (min eigenvalue {e.eigenvalues[0]:.3e})")
    return HermitianEig(np.clip(e.eigenvalues, 0.0, None), e.eigenvectors)


def floored_values(w: np.ndarray, floor: float | None, what: str) -> np.ndarray:
    if floor:
        return np.maximum(w, floor)
    if np.any(w <= 0):
        raise LinalgError(f"{what} of a singular matrix requested with the eigenvalue floor disabled")
    return w


def matrix_function(Y, f: str, s: float | None = None, floor: float | None = EPS_FLOOR) -> np.ndarray:
    """Apply ``log`` or ``power`` (exponent ``s``) to a PSD matrix through its spectrum.

    Eigenvalues slightly below zero (down to -1e-10) are clipped. For the log
    and for negative powers the spectrum is floored at ``floor``; pass
    ``floor=None`` to disable it, in which case a zero eigenvalue is an error.
    """
    e = _clipped_spectrum(Y)
    w = e.eigenvalues
    if f == "log":
        w = np.log(floored_values(w, floor, "log"))
    elif f == "power":
        if s is None:
            raise LinalgError("power needs an exponent s")
        if s < 0:
            w = floored_values(w, floor, "negative power") ** s
        elif s == 0:
            w = np.ones_like(w)
        else:
            w = w ** s
    else:
        raise LinalgError(f"unknown matrix function {f!r}")
    U = e.eigenvectors
    return (U * w) @ U.conj().T


def matrix_log(Y, floor: float | None = EPS_FLOOR) -> np.ndarray:
    return matrix_function(Y, "log", floor=floor)


def matrix_power(Y, s: float, floor: float | None = EPS_FLOOR) -> np.ndarray:
    return matrix_function(Y, "power", s, floor=floor)


def kron(*ops) -> np.ndarray:
    if not ops:
        raise LinalgError("kron needs at least one operand")
    out = as_matrix(ops[0])
    for op in ops[1:]:
        out = np.kron(out, as_matrix(op))
    return out


def commutator(A, B) -> np.ndarray:
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape[1] != B.shape[0] or B.shape[1] != A.shape[0] or A.shape != B.shape:
        raise LinalgError(f"commutator shape mismatch {A.shape} vs {B.shape}")
    return A @ B - B @ A


def is_psd(M, tol: float = PSD_TOL) -> bool:
    w = np.linalg.eigvalsh(hermitian_part(M))
    return bool(w.size == 0 or w[0] >= -tol)
