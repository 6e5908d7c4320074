"""Pulse, delay, gradient, and spin-lock channels."""
import math

import numpy as np
import pytest

from popsim.channels import (
    Composite,
    Unitary,
    apply,
    apply_all,
    compose_unitaries,
    default_slices,
    delay_propagator,
    gradient_channel,
    pulse_propagator,
    spinlock_channel,
)
from popsim.operators import decompose, product_operator
from popsim.system import DeviationState, chloroform


@pytest.fixture
def sys():
    return chloroform(4.0)


def coeffs(state):
    return {k: v.real for k, v in decompose(state.rho).nonzero(1e-12).items()}


def test_pulse_rotates_z_to_transverse(sys):
    state = DeviationState(product_operator(("z", "e")))
    # [pi/2]_x sends z to -y; [pi/2]_y sends z to +x.
    got = coeffs(apply(pulse_propagator(sys, ("I",), math.pi / 2, 0.0), state))
    assert got == pytest.approx({("y", "e"): -1.0})
    got = coeffs(apply(pulse_propagator(sys, ("I",), math.pi / 2, 90.0), state))
    assert got == pytest.approx({("x", "e"): 1.0})


def test_pulse_targets_are_selective(sys):
    state = DeviationState(product_operator(("z", "e"))
                           + product_operator(("e", "z")))
    got = coeffs(apply(pulse_propagator(sys, ("S",), math.pi, 0.0), state))
    assert got == pytest.approx({("z", "e"): 1.0, ("e", "z"): -1.0})


def test_pulse_arbitrary_phase(sys):
    # A pi pulse about the 45-degree axis swaps x and y components.
    state = DeviationState(product_operator(("x", "e")))
    got = coeffs(apply(pulse_propagator(sys, ("I",), math.pi, 45.0), state))
    assert got == pytest.approx({("y", "e"): 1.0})


def test_delay_evolves_coupling(sys):
    # Ix -> Ix cos(pi J t) + 2 Iy Sz sin(pi J t) with offsets off.
    state = DeviationState(product_operator(("x", "e")))
    t = 1.0 / (8 * sys.coupling_hz(0, 1))
    got = coeffs(apply(delay_propagator(sys, t), state))
    c = math.cos(math.pi / 8)
    s = math.sin(math.pi / 8)
    assert got == pytest.approx({("x", "e"): c, ("y", "z"): s})
    # A full 1/(2J) delay turns Ix entirely into the anti-phase term.
    got = coeffs(apply(delay_propagator(sys, 1.0 / (2 * sys.coupling_hz(0, 1))), state))
    assert got == pytest.approx({("y", "z"): 1.0})


def test_delay_offsets_excluded_by_default():
    sys = chloroform(4.0, offset_hz=(123.0, -45.0))
    state = DeviationState(product_operator(("x", "e")))
    t = 1.0 / (2 * sys.coupling_hz(0, 1))
    got = coeffs(apply(delay_propagator(sys, t), state))
    assert got == pytest.approx({("y", "z"): 1.0})


def test_gradient_dephases_transverse_keeps_longitudinal(sys):
    rho = (product_operator(("x", "e")) + product_operator(("e", "y"))
           + 0.5 * product_operator(("z", "e"))
           + 0.25 * product_operator(("z", "z")))
    got = coeffs(apply(gradient_channel(sys), DeviationState(rho)))
    assert got == pytest.approx({("z", "e"): 0.5, ("z", "z"): 0.25})


def test_gradient_sliced_matches_exact(sys):
    rng = np.random.default_rng(11)
    m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    state = DeviationState((m + m.conj().T) / 2)
    a = apply(gradient_channel(sys, slices=64), state)
    b = apply(gradient_channel(sys, slices="exact"), state)
    assert np.max(np.abs(a.rho - b.rho)) < 1e-12


def test_gradient_slices_env_override(sys, monkeypatch):
    monkeypatch.setenv("POPSIM_SLICES", "2")
    assert default_slices() == 2
    # Two slices only sample spatial phases 0 and pi, which cannot dephase
    # the order-4 coherence of transverse S magnetization at gamma ratio 4.
    rho = product_operator(("e", "x"))
    got = apply(gradient_channel(sys), DeviationState(rho))
    assert np.max(np.abs(got.rho)) > 0.1
    monkeypatch.delenv("POPSIM_SLICES")
    gone = apply(gradient_channel(sys), DeviationState(rho))
    assert np.max(np.abs(gone.rho)) < 1e-12


def test_spinlock_projects_on_axis(sys):
    rho = (product_operator(("x", "e")) + product_operator(("y", "e"))
           + product_operator(("z", "z")) + product_operator(("x", "y")))
    got = coeffs(apply(spinlock_channel(sys, "I", "x"), DeviationState(rho)))
    assert got == pytest.approx({("x", "e"): 1.0, ("x", "y"): 1.0})


def test_composite_shares_gradient_phase(sys):
    # grad ; [pi]^S_y ; grad refocuses 2IzSx when both gradients see the same
    # spatial phase (the pi pulse inverts the S coherence order in between),
    # but annihilates it when the gradients average independently.
    state = DeviationState(product_operator(("z", "x")))
    grad = gradient_channel(sys)
    flip = pulse_propagator(sys, ("S",), math.pi, 90.0)
    echo = apply(Composite((grad, flip, grad)), state)
    assert coeffs(echo) == pytest.approx({("z", "x"): -1.0})
    independent = apply(grad, apply(flip, apply(grad, state)))
    assert np.max(np.abs(independent.rho)) < 1e-12


def test_apply_preserves_trace_and_identity_coeff(sys):
    state = DeviationState(product_operator(("x", "e")), identity_coeff=0.25)
    out = apply(gradient_channel(sys), state)
    assert out.identity_coeff == 0.25
    assert abs(np.trace(out.rho)) < 1e-12


def test_compose_unitaries_order(sys):
    # Earliest channel is applied first, i.e. sits rightmost in the product.
    a = pulse_propagator(sys, ("I",), math.pi / 2, 0.0)
    b = pulse_propagator(sys, ("I",), math.pi / 2, 90.0)
    u = compose_unitaries([a, b])
    assert np.max(np.abs(u - b.u @ a.u)) < 1e-12
    with pytest.raises(ValueError):
        compose_unitaries([a, gradient_channel(sys)])


def test_unitary_validates(sys):
    with pytest.raises(ValueError):
        Unitary(np.array([[1, 1], [0, 1]], dtype=complex))
