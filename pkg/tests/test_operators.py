"""Product-operator basis, decomposition, and matrix-exponential helpers."""
import math

import numpy as np
import pytest

from popsim.operators import (
    basis,
    decompose,
    equal_up_to_global_phase,
    expm_unitary,
    global_phase_factor,
    is_hermitian,
    product_operator,
    single_spin_op,
)


def random_hermitian(rng, dim):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (m + m.conj().T) / 2


@pytest.mark.parametrize("n", [1, 2, 3])
def test_basis_orthonormal(n):
    ops = dict(basis(n))
    assert len(ops) == 4 ** n
    labels = list(ops)
    for a in labels:
        for b in labels:
            ip = np.trace(ops[a].conj().T @ ops[b])
            want = 1.0 if a == b else 0.0
            assert abs(ip - want) < 1e-12


def test_basis_hermitian():
    for _, op in basis(2):
        assert is_hermitian(op, 1e-12)


def test_product_operator_known_values():
    # One-spin z: sigma_z/2 scaled to unit trace-norm (sqrt(2) I_z).
    iz = product_operator(("z",))
    assert np.allclose(iz, math.sqrt(2) * np.diag([0.5, -0.5]))
    # Two-spin zz carries the conventional factor of 2: 2 I_z S_z.
    zz = product_operator(("z", "z"))
    assert np.allclose(zz, np.diag([0.5, -0.5, -0.5, 0.5]))
    # Identity term is normalized, not the bare identity.
    ee = product_operator(("e", "e"))
    assert np.allclose(ee, np.eye(4) / 2)


def test_decompose_round_trip():
    rng = np.random.default_rng(3)
    for _ in range(20):
        rho = random_hermitian(rng, 4)
        dec = decompose(rho)
        assert np.max(np.abs(dec.reconstruct() - rho)) < 1e-12


def test_decompose_real_for_hermitian():
    rng = np.random.default_rng(4)
    rho = random_hermitian(rng, 4)
    for coeff in decompose(rho).coeffs.values():
        assert abs(coeff.imag) < 1e-12


def test_decompose_picks_out_single_term():
    rho = 0.75 * product_operator(("x", "z"))
    dec = decompose(rho)
    assert abs(dec.coefficient(("x", "z")) - 0.75) < 1e-12
    assert all(abs(v) < 1e-12 for k, v in dec.coeffs.items() if k != ("x", "z"))


def test_expm_unitary_is_unitary():
    rng = np.random.default_rng(5)
    h = random_hermitian(rng, 4)
    u = expm_unitary(h, 0.7)
    assert np.max(np.abs(u @ u.conj().T - np.eye(4))) < 1e-12


def test_expm_unitary_known_rotation():
    # exp(-i pi/2 sigma_x/2) rotates z to -y on the Bloch sphere.
    ix = single_spin_op(1, 0, "x")
    u = expm_unitary(ix, math.pi / 2)
    iz = single_spin_op(1, 0, "z")
    iy = single_spin_op(1, 0, "y")
    assert np.max(np.abs(u @ iz @ u.conj().T + iy)) < 1e-12


def test_expm_unitary_rejects_non_hermitian():
    with pytest.raises(ValueError):
        expm_unitary(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_equal_up_to_global_phase():
    rng = np.random.default_rng(6)
    u = expm_unitary(random_hermitian(rng, 4), 1.3)
    for phase in (1.0, 1j, np.exp(0.123j)):
        assert equal_up_to_global_phase(u, phase * u, 1e-10)
        assert abs(global_phase_factor(phase * u, u) - phase) < 1e-10
    v = expm_unitary(random_hermitian(rng, 4), 0.9)
    assert not equal_up_to_global_phase(u, v, 1e-10)


def test_single_spin_op_embedding():
    # I_x on spin 0 of two acts as sigma_x/2 (x) identity.
    got = single_spin_op(2, 0, "x")
    sx = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    assert np.allclose(got, np.kron(sx, np.eye(2)))
    got = single_spin_op(2, 1, "x")
    assert np.allclose(got, np.kron(np.eye(2), sx))
