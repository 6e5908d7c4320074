"""Evolution channels: unitary pulses/delays, gradient dephasing, spin locks.

Pulse convention: [theta]_phi = exp(-i * theta * (I_x cos(phi) + I_y sin(phi))),
so conjugation rotates magnetization right-handedly.  Delays evolve under the
internal Hamiltonian with chemical-shift offsets off by default (doubly
rotating frame); offsets are switched on only during detection.

A gradient is a spatial phase average.  Within a Composite the phase slices
are shared across every gradient item (the sample does not move between
pulses), which is what makes the gradient / pi-pulse / gradient sandwich act
as a spin-selective gradient.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .operators import expm_unitary, single_spin_op
from .system import DeviationState, SpinSystem, internal_hamiltonian

DEFAULT_SLICES = 64
SLICES_ENV = "POPSIM_SLICES"


@dataclass(frozen=True)
class Unitary:
    u: np.ndarray

    def __post_init__(self):
        u = np.asarray(self.u, dtype=complex)
        d = u.shape[0]
        if np.max(np.abs(u.conj().T @ u - np.eye(d))) > 1e-10:
            raise ValueError("matrix is not unitary")
        u.setflags(write=False)
        object.__setattr__(self, "u", u)


@dataclass(frozen=True)
class PhaseAverage:
    """Gradient dephasing: average of exp(-i*theta_m*G) rho exp(+i*theta_m*G),
    G = strength * sum_k weights[k] * I_kz, theta_m = 2 pi m / slices.

    slices == "exact" zeroes every element of nonzero weighted coherence
    order analytically instead of summing a finite number of slices.
    """

    weights: tuple[float, ...]
    slices: Union[int, str] = DEFAULT_SLICES
    strength: float = 1.0


@dataclass(frozen=True)
class AxisProjection:
    """Idealized infinite spin lock: keep product-operator terms whose
    target-spin label is the lock axis or identity, zero the rest."""

    target: int
    axis: str


@dataclass(frozen=True)
class Composite:
    parts: tuple


Channel = Union[Unitary, PhaseAverage, AxisProjection, Composite]


def default_slices() -> int:
    return int(os.environ.get(SLICES_ENV, DEFAULT_SLICES))


def pulse_propagator(sys: SpinSystem, targets: Iterable[str | int],
                     angle: float, phase_deg: float) -> Unitary:
    """RF pulse of the given flip angle applied to every target spin at once."""
    idx = [sys.spin_index(t) for t in targets]
    if not idx:
        raise ValueError("pulse needs at least one target spin")
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate spin in pulse target list")
    if not math.isfinite(angle):
        raise ValueError("pulse angle must be finite")
    phi = math.radians(phase_deg)
    gen = np.zeros((sys.dim, sys.dim), dtype=complex)
    for k in idx:
        gen = gen + (math.cos(phi) * single_spin_op(sys.n, k, "x")
                     + math.sin(phi) * single_spin_op(sys.n, k, "y"))
    return Unitary(expm_unitary(gen, angle))


def delay_propagator(sys: SpinSystem, duration_s: float,
                     include_offsets: bool = False) -> Unitary:
    if duration_s < 0:
        raise ValueError("delay duration must be nonnegative")
    h = internal_hamiltonian(sys, include_offsets)
    return Unitary(expm_unitary(h, duration_s))


def gradient_channel(sys: SpinSystem, slices: Union[int, str, None] = None,
                     strength: float = 1.0) -> PhaseAverage:
    if slices is None:
        slices = default_slices()
    if slices != "exact":
        slices = int(slices)
        if slices < 2:
            raise ValueError("gradient needs at least 2 phase slices")
    return PhaseAverage(weights=sys.gamma_ratio, slices=slices, strength=strength)


def spinlock_channel(sys: SpinSystem, target: str | int, axis: str) -> AxisProjection:
    if axis not in ("x", "y"):
        raise ValueError(f"spin lock axis must be x or y, got {axis!r}")
    return AxisProjection(target=sys.spin_index(target), axis=axis)


def _z_weights_diag(weights: tuple[float, ...]) -> np.ndarray:
    """Diagonal of sum_k weights[k] I_kz in the computational basis."""
    n = len(weights)
    g = np.zeros(2**n)
    for k in range(n):
        g = g + weights[k] * np.real(np.diag(single_spin_op(n, k, "z")))
    return g


def _gradient_phase_diag(ch: PhaseAverage, theta: float) -> np.ndarray:
    """Diagonal of the slice unitary exp(-i * theta * strength * G)."""
    g = _z_weights_diag(ch.weights)
    return np.exp(-1j * theta * ch.strength * g)


def _apply_phase_average(ch: PhaseAverage, rho: np.ndarray) -> np.ndarray:
    g = _z_weights_diag(ch.weights)
    q = ch.strength * (g[:, None] - g[None, :])  # weighted coherence orders
    if ch.slices == "exact":
        factor = (np.abs(q) < 1e-9).astype(complex)
    else:
        m = np.arange(ch.slices)
        theta = 2 * math.pi * m / ch.slices
        factor = np.mean(np.exp(-1j * theta[:, None, None] * q[None, :, :]), axis=0)
    return rho * factor


def _apply_projection(ch: AxisProjection, rho: np.ndarray) -> np.ndarray:
    from .operators import basis, decompose  # local import to avoid cycle at module load

    dec = decompose(rho)
    keep = ("e", ch.axis)
    out = np.zeros_like(rho)
    for labels, b in basis(dec.n):
        if labels[ch.target] in keep:
            out = out + dec.coeffs[labels] * b
    return out


def _composite_slice_count(parts: tuple) -> int:
    counts = [p.slices for p in parts
              if isinstance(p, PhaseAverage) and p.slices != "exact"]
    return max(counts, default=default_slices())


def _apply_matrix(ch: Channel, rho: np.ndarray) -> np.ndarray:
    if isinstance(ch, Unitary):
        if ch.u.shape[0] != rho.shape[0]:
            raise ValueError("channel/state dimension mismatch")
        return ch.u @ rho @ ch.u.conj().T
    if isinstance(ch, PhaseAverage):
        if 2 ** len(ch.weights) != rho.shape[0]:
            raise ValueError("channel/state dimension mismatch")
        return _apply_phase_average(ch, rho)
    if isinstance(ch, AxisProjection):
        return _apply_projection(ch, rho)
    if isinstance(ch, Composite):
        grads = [p for p in ch.parts if isinstance(p, PhaseAverage)]
        if not grads:
            out = rho
            for p in ch.parts:
                out = _apply_matrix(p, out)
            return out
        # Shared spatial phase: run the whole item list once per slice,
        # substituting each gradient by its slice unitary, then average.
        slices = _composite_slice_count(ch.parts)
        acc = np.zeros_like(rho)
        for m in range(slices):
            theta = 2 * math.pi * m / slices
            cur = rho
            for p in ch.parts:
                if isinstance(p, PhaseAverage):
                    v = _gradient_phase_diag(p, theta)
                    cur = (v[:, None] * cur) * v.conj()[None, :]
                else:
                    cur = _apply_matrix(p, cur)
            acc = acc + cur
        return acc / slices
    raise TypeError(f"not a channel: {ch!r}")


def apply(ch: Channel, state: DeviationState) -> DeviationState:
    """Apply a channel; the identity coefficient passes through unchanged."""
    rho = _apply_matrix(ch, state.rho)
    # Channels preserve Hermiticity; clip the rounding skew so downstream
    # Hermitian checks stay exact.
    rho = (rho + rho.conj().T) / 2
    return DeviationState(rho=rho, identity_coeff=state.identity_coeff)


def apply_all(channels: Iterable[Channel], state: DeviationState) -> DeviationState:
    """Apply a compiled sequence with shared gradient phases (one Composite)."""
    return apply(Composite(parts=tuple(channels)), state)


def compose_unitaries(channels: Iterable[Channel]) -> np.ndarray:
    """Time-ordered product of unitary channels (earliest = rightmost factor)."""
    u = None
    for ch in channels:
        if isinstance(ch, Composite):
            inner = compose_unitaries(ch.parts)
            u = inner if u is None else inner @ u
            continue
        if not isinstance(ch, Unitary):
            raise ValueError(f"sequence contains a non-unitary item: {type(ch).__name__}")
        u = ch.u if u is None else ch.u @ u
    if u is None:
        raise ValueError("cannot compose an empty channel list without a dimension")
    return u
