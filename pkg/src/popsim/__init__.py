"""Deterministic simulator of liquid-state NMR quantum information processing
on small spin systems: product-operator algebra, pulse/delay/gradient/spin-lock
channels, a pulse-sequence language, and simulated detection."""

from .operators import (
    ProductOperatorDecomposition,
    basis,
    decompose,
    equal_up_to_global_phase,
    expm_unitary,
    kron,
    product_operator,
    single_spin_op,
)
from .system import (
    DeviationState,
    PRESETS,
    SpinSystem,
    chloroform,
    equilibrium_deviation,
    internal_hamiltonian,
    load_system,
    pseudo_pure_target,
)
from .channels import (
    AxisProjection,
    Composite,
    PhaseAverage,
    Unitary,
    apply,
    apply_all,
    delay_propagator,
    gradient_channel,
    pulse_propagator,
    spinlock_channel,
)
from .dsl import (
    CANNED_NAMES,
    CompileError,
    ParseError,
    PulseSequence,
    canned,
    compile,
    format_sequence,
    parse,
    propagator_of,
)
from .detection import (
    Fid,
    PeakTable,
    Spectrum,
    correlation,
    observe_fid,
    peaks,
    readout_check,
    spectrum,
)

__version__ = "0.1.0"
