"""Simulated observation: FIDs, spectra, peak patterns, and correlations.

The induction signal on a channel is Tr(rho(t) * (I_x + i I_y)_channel) with
rho(t) evolved under the internal Hamiltonian including chemical-shift
offsets, damped by exp(-t/T2).  The spectrum is the plain DFT with a
zero-fill factor of 2; the frequency axis is relative to the channel carrier,
so a doublet sits at offset +- J/2.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import channels as _channels
from .operators import decompose, is_hermitian, single_spin_op
from .system import DeviationState, SpinSystem, internal_hamiltonian

PATTERNS = ("in-phase doublet", "anti-phase doublet", "singlet", "null")


@dataclass(frozen=True)
class Fid:
    channel: int
    dwell_s: float
    samples: np.ndarray
    t2_s: float


@dataclass(frozen=True)
class Spectrum:
    freq_hz: np.ndarray
    amplitudes: np.ndarray

    @property
    def bin_hz(self) -> float:
        return float(self.freq_hz[1] - self.freq_hz[0])


@dataclass(frozen=True)
class Peak:
    freq_hz: float
    magnitude: float
    phase_deg: float


@dataclass(frozen=True)
class PeakTable:
    peaks: tuple[Peak, ...]
    pattern: str


def default_dwell(sys: SpinSystem) -> float:
    """Spectral width of 4J keeps the +-J/2 doublet mid-band."""
    j = abs(sys.coupling_hz(0, 1)) if sys.n >= 2 else 0.0
    return 1.0 / (4.0 * j) if j > 0 else 1e-3


def observe_fid(sys: SpinSystem, state: DeviationState, channel: str | int,
                n: int = 2048, dwell_s: float | None = None) -> Fid:
    """Complex induction signal of one channel, n points at the given dwell."""
    if n < 256 or n & (n - 1):
        raise ValueError("number of points must be a power of two >= 256")
    if dwell_s is None:
        dwell_s = default_dwell(sys)
    if dwell_s <= 0:
        raise ValueError("dwell time must be positive")
    ch = sys.spin_index(channel)
    # The internal Hamiltonian is diagonal, so each matrix element of rho
    # evolves as a single complex exponential.
    w = np.real(np.diag(internal_hamiltonian(sys, include_offsets=True)))
    obs = (single_spin_op(sys.n, ch, "x") + 1j * single_spin_op(sys.n, ch, "y"))
    t = np.arange(n) * dwell_s
    samples = np.zeros(n, dtype=complex)
    rho = state.rho
    for i, j in zip(*np.nonzero(obs.T)):
        # Tr(rho(t) O) = sum_ij rho_ij exp(-i (w_i - w_j) t) O_ji
        samples += rho[i, j] * obs[j, i] * np.exp(-1j * (w[i] - w[j]) * t)
    samples *= np.exp(-t / sys.t2_s[ch])
    return Fid(channel=ch, dwell_s=dwell_s, samples=samples, t2_s=sys.t2_s[ch])


def spectrum(fid: Fid) -> Spectrum:
    """DFT of the FID, zero-filled by a factor of 2, axis in Hz."""
    n2 = 2 * len(fid.samples)
    amps = np.fft.fftshift(np.fft.fft(fid.samples, n=n2))
    freqs = np.fft.fftshift(np.fft.fftfreq(n2, d=fid.dwell_s))
    return Spectrum(freq_hz=freqs, amplitudes=amps)


def peaks(sp: Spectrum, threshold_rel: float = 0.1) -> PeakTable:
    """Local maxima of |amplitude| above threshold_rel * max, classified.

    Phases are reported relative to the strongest peak (zero-order reference).
    """
    if not 0.0 < threshold_rel < 1.0:
        raise ValueError("threshold_rel must be in (0, 1)")
    mag = np.abs(sp.amplitudes)
    top = float(mag.max(initial=0.0))
    if top <= 1e-12:
        return PeakTable(peaks=(), pattern="null")
    thr = threshold_rel * top
    idx = [i for i in range(1, len(mag) - 1)
           if mag[i] >= thr and mag[i] > mag[i - 1] and mag[i] >= mag[i + 1]]
    ref_i = max(idx, key=lambda i: mag[i], default=None)
    if ref_i is None:
        return PeakTable(peaks=(), pattern="null")
    ref_phase = math.degrees(np.angle(sp.amplitudes[ref_i]))
    found = []
    for i in idx:
        phase = math.degrees(np.angle(sp.amplitudes[i])) - ref_phase
        phase = (phase + 180.0) % 360.0 - 180.0
        found.append(Peak(freq_hz=float(sp.freq_hz[i]), magnitude=float(mag[i]),
                          phase_deg=phase))
    found.sort(key=lambda p: p.freq_hz)
    return PeakTable(peaks=tuple(found), pattern=_classify(found))


def _classify(found: list[Peak]) -> str:
    if not found:
        return "null"
    if len(found) == 1:
        return "singlet"
    a, b = sorted(found, key=lambda p: p.magnitude, reverse=True)[:2]
    dphase = abs(((a.phase_deg - b.phase_deg) + 180.0) % 360.0 - 180.0)
    return "anti-phase doublet" if dphase > 90.0 else "in-phase doublet"


_AXIS_OPS = {"x": 0, "y": 1}


def correlation(state: DeviationState, axis_i: str, axis_s: str) -> float:
    """Tr(4 * I_a S_b * rho) for a two-spin state; real for Hermitian rho."""
    rho = state.rho
    if rho.shape[0] != 4:
        raise ValueError("correlation is defined for two-spin states")
    if not is_hermitian(rho, 1e-12):
        raise ValueError("state must be Hermitian")
    if axis_i not in ("x", "y") or axis_s not in ("x", "y"):
        raise ValueError("correlation axes must be x or y")
    op = 4.0 * single_spin_op(2, 0, axis_i) @ single_spin_op(2, 1, axis_s)
    val = complex(np.trace(op @ rho))
    if abs(val.imag) > 1e-12 * max(1.0, abs(val.real)):
        raise ValueError("correlation came out complex; state not Hermitian?")
    return val.real


@dataclass(frozen=True)
class ReadoutVerdict:
    passed: bool
    observed: dict[str, str]
    expected: dict[str, str]


def readout_check(sys: SpinSystem, state: DeviationState, readout,
                  expected: dict[str, str], n: int = 2048,
                  dwell_s: float | None = None,
                  threshold_rel: float = 0.1) -> ReadoutVerdict:
    """Apply a unitary-only readout sequence and compare per-channel patterns.

    readout may be a PulseSequence or an already-compiled channel list;
    expected maps spin names to patterns from PATTERNS.
    """
    from .dsl import PulseSequence, compile as compile_seq

    if isinstance(readout, PulseSequence):
        compiled = compile_seq(readout, sys)
    else:
        compiled = list(readout)
    for ch in compiled:
        if not isinstance(ch, _channels.Unitary):
            raise ValueError("readout sequence must be unitary-only")
    after = _channels.apply_all(compiled, state) if compiled else state
    observed = {}
    for name in expected:
        fid = observe_fid(sys, after, name, n=n, dwell_s=dwell_s)
        observed[name] = peaks(spectrum(fid), threshold_rel).pattern
    return ReadoutVerdict(passed=observed == dict(expected),
                          observed=observed, expected=dict(expected))


def fid_to_csv(fid: Fid, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["t_s", "re", "im"])
        for k, s in enumerate(fid.samples):
            w.writerow([repr(k * fid.dwell_s), repr(float(s.real)),
                        repr(float(s.imag))])


def spectrum_to_csv(sp: Spectrum, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["freq_hz", "re", "im"])
        for fr, a in zip(sp.freq_hz, sp.amplitudes):
            w.writerow([repr(float(fr)), repr(float(a.real)),
                        repr(float(a.imag))])


def peak_table_to_dict(pt: PeakTable) -> dict:
    return {
        "pattern": pt.pattern,
        "peaks": [{"freq_hz": p.freq_hz, "magnitude": p.magnitude,
                   "phase_deg": p.phase_deg} for p in pt.peaks],
    }
