"""Dense complex linear algebra for small Hermitian/unitary matrices.

Matrices are plain ``numpy.ndarray`` values; the functions here validate the
structural invariants (Hermiticity, unitarity, unit norm) instead of wrapping
arrays in dedicated classes.  Pure states carry their tensor-factor structure
in :class:`PureState`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .constants import TOL
from .errors import BranchCutError, ValidationError

__all__ = [
    "PureState",
    "assert_hermitian",
    "assert_unitary",
    "hermitian_expm",
    "unitary_principal_log",
    "su_basis",
    "hs_inner",
    "haar_unitary",
    "haar_state",
]


def _as_square(a, name="matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {a.shape}")
    return a


def assert_hermitian(h, atol: float = TOL.hermitian_atol, name="matrix") -> np.ndarray:
    h = _as_square(h, name)
    dev = np.max(np.abs(h - h.conj().T)) if h.size else 0.0
    if dev > atol:
        raise ValidationError(f"{name} is not Hermitian (max deviation {dev:.3e} > {atol:.1e})")
    return h


def assert_unitary(u, atol: float = TOL.unitary_atol, name="matrix") -> np.ndarray:
    u = _as_square(u, name)
    dev = np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0])))
    if dev > atol:
        raise ValidationError(f"{name} is not unitary (max deviation {dev:.3e} > {atol:.1e})")
    return u


@dataclass(frozen=True)
class PureState:
    """Normalized state vector on a tensor product of finite factors."""

    factors: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "factors", tuple(int(f) for f in self.factors))
        object.__setattr__(self, "amplitudes", amps)
        if any(f < 1 for f in self.factors):
            raise ValidationError(f"factor dimensions must be positive: {self.factors}")
        if math.prod(self.factors) != amps.size:
            raise ValidationError(
                f"amplitude length {amps.size} does not match factors {self.factors}")
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > TOL.state_norm_atol:
            raise ValidationError(f"state norm {nrm} deviates from 1 beyond tolerance")

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def tensor_view(self) -> np.ndarray:
        return self.amplitudes.reshape(self.factors)

    def overlap(self, other: "PureState") -> complex:
        if other.dim != self.dim:
            raise ValidationError("overlap requires equal total dimensions")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def hermitian_expm(h, t: float) -> np.ndarray:
    """exp(-i t H) for Hermitian H, via spectral decomposition.

    Eigendecomposition keeps the result unitary to machine precision, which
    matters more than speed at the dimensions used here.
    """
    h = assert_hermitian(h, name="H")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def unitary_principal_log(u) -> np.ndarray:
    """Hermitian M with exp(-i M) = U and eigenvalues of M in (-pi, pi].

    Raises :class:`BranchCutError` when an eigenphase of U sits within
    ``TOL.branch_cut_atol`` of the branch cut at -pi, where the principal
    generator is ambiguous.
    """
    u = assert_unitary(u, name="U")
    # Complex Schur of a normal matrix: T is diagonal up to roundoff and the
    # Schur vectors form an orthonormal eigenbasis.
    t, q = scipy.linalg.schur(u, output="complex")
    eigs = np.diag(t)
    phases = np.angle(eigs)  # in (-pi, pi]
    if np.any(np.pi - np.abs(phases) < TOL.branch_cut_atol):
        worst = float(np.min(np.pi - np.abs(phases)))
        raise BranchCutError(
            f"eigenphase within {worst:.2e} of the -pi branch cut; "
            "principal logarithm is ambiguous")
    m = (q * (-phases)) @ q.conj().T
    return 0.5 * (m + m.conj().T)


def su_basis(d: int) -> list[np.ndarray]:
    """Orthonormal traceless Hermitian basis of su(d), Tr X_j X_k = delta_jk.

    Generalized Gell-Mann construction: symmetric pairs, antisymmetric pairs,
    then the diagonal ladder.  For d = 2 this returns the Pauli matrices
    divided by sqrt(2).
    """
    if d < 2:
        raise ValidationError(f"su basis requires d >= 2, got {d}")
    basis = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0 / math.sqrt(2.0)
            basis.append(sym)
            asym = np.zeros((d, d), dtype=complex)
            asym[j, k] = -1j / math.sqrt(2.0)
            asym[k, j] = 1j / math.sqrt(2.0)
            basis.append(asym)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        basis.append(np.diag(diag / math.sqrt(l * (l + 1))).astype(complex))
    return basis


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product Tr(A^dagger B)."""
    a = _as_square(a, "A")
    b = _as_square(b, "B")
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.sum(a.conj() * b))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with phase fixing."""
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unit vector in C^dim."""
    z = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return z / np.linalg.norm(z)
