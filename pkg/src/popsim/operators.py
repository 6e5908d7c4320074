"""Dense complex operator algebra on the product-operator basis.

Single-spin operators follow the NMR convention I_a = sigma_a / 2.  The
product-operator basis is orthonormal under the plain trace inner product
Tr(A^dag B), so decomposition of a density deviation is a projection.  For
two spins this reproduces the familiar set {1/2*1, I_x, ..., 2I_zS_z}.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

AXES = ("e", "x", "y", "z")

_PAULI = {
    "e": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# I_a = sigma_a / 2 for the spin axes, identity left alone.
SINGLE_SPIN = {a: (_PAULI[a] if a == "e" else _PAULI[a] / 2) for a in AXES}

HERMITIAN_TOL = 1e-10

MAX_SPINS = 4


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; dimension multiplies."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def spin_count(dim: int) -> int:
    """Number of spins housed by a dim x dim matrix; dim must be a power of two."""
    n = int(dim).bit_length() - 1
    if dim <= 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def is_hermitian(m: np.ndarray, tol: float = 1e-12) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def single_spin_op(n: int, k: int, axis: str) -> np.ndarray:
    """Operator I_{k,axis} embedded in the n-spin space (identity elsewhere)."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unknown axis {axis!r}")
    if not 0 <= k < n:
        raise ValueError(f"spin index {k} out of range for {n} spins")
    op = np.eye(1, dtype=complex)
    for i in range(n):
        op = kron(op, SINGLE_SPIN[axis if i == k else "e"])
    return op


def product_operator(labels: tuple[str, ...]) -> np.ndarray:
    """Normalized basis element for a label tuple, one axis letter per spin.

    Normalization 2^(k - n/2), with k the number of non-identity labels,
    makes Tr(B^dag B) = 1.  For n = 2 this is the textbook prefactor
    (1/2 for the identity, 1 for one-spin terms, 2 for two-spin terms).
    """
    n = len(labels)
    k = sum(1 for a in labels if a != "e")
    op = np.eye(1, dtype=complex)
    for a in labels:
        if a not in AXES:
            raise ValueError(f"unknown label {a!r}")
        op = kron(op, SINGLE_SPIN[a])
    return 2.0 ** (k - n / 2.0) * op


@lru_cache(maxsize=None)
def basis(n: int) -> tuple[tuple[tuple[str, ...], np.ndarray], ...]:
    """The 4^n orthonormal product-operator basis elements, label-keyed."""
    if not 1 <= n <= MAX_SPINS:
        raise ValueError(f"spin count {n} outside supported range 1..{MAX_SPINS}")
    out = []
    for labels in product(AXES, repeat=n):
        m = product_operator(labels)
        m.setflags(write=False)
        out.append((labels, m))
    return tuple(out)


@dataclass(frozen=True)
class ProductOperatorDecomposition:
    """Coefficients of a matrix on the orthonormal product-operator basis."""

    n: int
    coeffs: dict[tuple[str, ...], complex]

    def coefficient(self, labels: tuple[str, ...]) -> complex:
        return self.coeffs[tuple(labels)]

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((2**self.n, 2**self.n), dtype=complex)
        for labels, b in basis(self.n):
            out = out + self.coeffs[labels] * b
        return out

    def nonzero(self, tol: float = 1e-12) -> dict[tuple[str, ...], complex]:
        return {k: v for k, v in self.coeffs.items() if abs(v) > tol}


def decompose(rho: np.ndarray) -> ProductOperatorDecomposition:
    """Project rho onto the product-operator basis: c_i = Tr(B_i^dag rho)."""
    rho = np.asarray(rho, dtype=complex)
    n = spin_count(rho.shape[0])
    coeffs = {}
    for labels, b in basis(n):
        coeffs[labels] = complex(np.trace(b.conj().T @ rho))
    return ProductOperatorDecomposition(n=n, coeffs=coeffs)


def expm_unitary(h: np.ndarray, t: float) -> np.ndarray:
    """exp(-i h t) for Hermitian h, via eigendecomposition (exactly unitary)."""
    h = np.asarray(h, dtype=complex)
    if not is_hermitian(h, HERMITIAN_TOL):
        raise ValueError("generator is not Hermitian")
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def equal_up_to_global_phase(u: np.ndarray, v: np.ndarray, tol: float) -> bool:
    """True iff u = lambda * v for some unit-modulus lambda, to max-norm tol.

    lambda is read off at the largest-magnitude entry of v.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch {u.shape} vs {v.shape}")
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    if abs(v[idx]) == 0.0:
        return bool(np.max(np.abs(u)) <= tol)
    lam = u[idx] / v[idx]
    if abs(lam) == 0.0:
        return False
    lam /= abs(lam)
    return bool(np.max(np.abs(u - lam * v)) <= tol)


def global_phase_factor(u: np.ndarray, v: np.ndarray) -> complex:
    """The unit-modulus lambda relating u ~ lambda*v, from v's largest entry."""
    v = np.asarray(v, dtype=complex)
    idx = np.unravel_index(np.argmax(np.abs(v)), v.shape)
    lam = np.asarray(u, dtype=complex)[idx] / v[idx]
    return lam / abs(lam)
