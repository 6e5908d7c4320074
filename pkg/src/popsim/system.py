"""Spin-system description, internal Hamiltonian, and reference states.

All Hamiltonians are in rad/s; user-facing frequencies are in Hz.  Only the
weak-coupling (I_z S_z) form is supported, so the internal Hamiltonian is
always diagonal in the computational basis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .operators import is_hermitian, single_spin_op


@dataclass(frozen=True)
class SpinSystem:
    names: tuple[str, ...]
    gamma_ratio: tuple[float, ...]
    offset_hz: tuple[float, ...]
    j_hz: tuple[tuple[float, ...], ...]
    t2_s: tuple[float, ...]

    def __post_init__(self):
        n = len(self.names)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "gamma_ratio", tuple(float(g) for g in self.gamma_ratio))
        object.__setattr__(self, "offset_hz", tuple(float(o) for o in self.offset_hz))
        object.__setattr__(self, "t2_s", tuple(float(t) for t in self.t2_s))
        object.__setattr__(self, "j_hz", tuple(tuple(float(x) for x in row) for row in self.j_hz))
        if len(set(self.names)) != n:
            raise ValueError("spin names must be unique")
        for attr in ("gamma_ratio", "offset_hz", "t2_s"):
            if len(getattr(self, attr)) != n:
                raise ValueError(f"{attr} must have one entry per spin")
        if self.gamma_ratio[0] != 1.0:
            raise ValueError("gamma_ratio[0] must be 1 (observed nucleus)")
        if any(g == 0.0 for g in self.gamma_ratio):
            raise ValueError("gamma ratios must be nonzero")
        if len(self.j_hz) != n or any(len(row) != n for row in self.j_hz):
            raise ValueError("j_hz must be an n x n table")
        for k in range(n):
            if self.j_hz[k][k] != 0.0:
                raise ValueError("j_hz diagonal must be zero")
            for l in range(n):
                if self.j_hz[k][l] != self.j_hz[l][k]:
                    raise ValueError("j_hz must be symmetric")

    @property
    def n(self) -> int:
        return len(self.names)

    @property
    def dim(self) -> int:
        return 2**self.n

    def spin_index(self, label: str | int) -> int:
        if isinstance(label, int):
            if not 0 <= label < self.n:
                raise ValueError(f"spin index {label} out of range")
            return label
        try:
            return self.names.index(label)
        except ValueError:
            raise ValueError(f"unknown spin {label!r}") from None

    def coupling_hz(self, k: int = 0, l: int = 1) -> float:
        return self.j_hz[k][l]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "names": list(self.names),
            "gamma_ratio": list(self.gamma_ratio),
            "offset_hz": list(self.offset_hz),
            "j_hz": [list(row) for row in self.j_hz],
            "t2_s": list(self.t2_s),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpinSystem":
        names = tuple(d["names"])
        if "n" in d and int(d["n"]) != len(names):
            raise ValueError("n does not match the number of names")
        return cls(
            names=names,
            gamma_ratio=tuple(d["gamma_ratio"]),
            offset_hz=tuple(d["offset_hz"]),
            j_hz=tuple(tuple(row) for row in d["j_hz"]),
            t2_s=tuple(d["t2_s"]),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "SpinSystem":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def chloroform(gamma_ratio: float = 4.0, j_hz: float = 200.0,
               offset_hz: tuple[float, float] = (0.0, 0.0),
               t2_s: tuple[float, float] = (0.5, 0.5)) -> SpinSystem:
    """Two-spin 13C (I, observed) / 1H (S) preset."""
    return SpinSystem(
        names=("I", "S"),
        gamma_ratio=(1.0, gamma_ratio),
        offset_hz=offset_hz,
        j_hz=((0.0, j_hz), (j_hz, 0.0)),
        t2_s=t2_s,
    )


PRESETS = {
    "chloroform-ratio4": lambda: chloroform(gamma_ratio=4.0),
    "chloroform-physical": lambda: chloroform(gamma_ratio=3.976),
}


def load_system(source: str | Path) -> SpinSystem:
    """Resolve a preset name or a JSON config file path."""
    if isinstance(source, str) and source in PRESETS:
        return PRESETS[source]()
    return SpinSystem.from_file(source)


@dataclass(frozen=True)
class DeviationState:
    """Deviation density operator plus the separately-tracked identity part."""

    rho: np.ndarray
    identity_coeff: float = 0.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if not is_hermitian(rho, 1e-12):
            raise ValueError("deviation density matrix must be Hermitian")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]


def internal_hamiltonian(sys: SpinSystem, include_offsets: bool = False) -> np.ndarray:
    """Weak-coupling internal Hamiltonian in rad/s (diagonal)."""
    n = sys.n
    h = np.zeros((sys.dim, sys.dim), dtype=complex)
    if include_offsets:
        for k in range(n):
            h = h + 2 * math.pi * sys.offset_hz[k] * single_spin_op(n, k, "z")
    for k in range(n):
        for l in range(k + 1, n):
            if sys.j_hz[k][l] != 0.0:
                h = h + (2 * math.pi * sys.j_hz[k][l]
                         * single_spin_op(n, k, "z") @ single_spin_op(n, l, "z"))
    return h


def equilibrium_deviation(sys: SpinSystem) -> DeviationState:
    """Thermal deviation sum_k (gamma_k / gamma_0) I_kz; identity part 1/4."""
    rho = np.zeros((sys.dim, sys.dim), dtype=complex)
    for k in range(sys.n):
        rho = rho + sys.gamma_ratio[k] * single_spin_op(sys.n, k, "z")
    return DeviationState(rho=rho, identity_coeff=0.25)


def pseudo_pure_target(ket: int, n: int) -> np.ndarray:
    """Deviation matrix of the pseudo-pure state on basis ket |ket>.

    Equals 2^(n-1) * (|ket><ket| - 1/2^n); for n=2, ket=0 this is
    I_z + S_z + 2 I_z S_z = diag(3/2, -1/2, -1/2, -1/2).
    """
    dim = 2**n
    if not 0 <= ket < dim:
        raise ValueError(f"ket index {ket} out of range for {n} spins")
    rho = -np.eye(dim, dtype=complex) / dim
    rho[ket, ket] += 1.0
    return 2.0 ** (n - 1) * rho
