import numpy as np
import pytest

from ghzpurify.ghz import ghz_vector
from ghzpurify.linalg import (
    PureState,
    apply_local,
    basis_state,
    fourier,
    gxor,
    is_unitary,
    measure_standard,
    omega,
    phase_z,
    shift_x,
)


def test_phase_z_small_cases():
    np.testing.assert_allclose(phase_z(2), np.diag([1, -1]), atol=1e-15)
    w = np.exp(2j * np.pi / 3)
    np.testing.assert_allclose(phase_z(3), np.diag([1, w, w * w]), atol=1e-15)
    np.testing.assert_allclose(np.linalg.matrix_power(phase_z(5), 5), np.eye(5), atol=1e-12)


def test_shift_x_convention():
    np.testing.assert_array_equal(shift_x(2), [[0, 1], [1, 0]])
    # X|0> = |d-1>
    out = shift_x(3) @ np.array([1, 0, 0])
    np.testing.assert_array_equal(out, [0, 0, 1])


@pytest.mark.parametrize("d", [4, 5])
def test_fourier_columns_are_x_eigenvectors(d):
    f, x = fourier(d), shift_x(d)
    for k in range(d):
        col = f[:, k]
        np.testing.assert_allclose(x @ col, omega(d) ** k * col, atol=1e-12)


def test_fourier_small_and_unitary():
    np.testing.assert_allclose(fourier(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-15)
    f = fourier(6)
    np.testing.assert_allclose(f.conj().T @ f, np.eye(6), atol=1e-12)


def test_shift_is_fourier_conjugate_of_phase():
    # exactly one of X = F Z F^dag, X = F Z^dag F^dag holds for this X convention
    for d in range(2, 7):
        f, z, x = fourier(d), phase_z(d), shift_x(d)
        plus = np.max(np.abs(x - f @ z @ f.conj().T))
        minus = np.max(np.abs(x - f @ z.conj().T @ f.conj().T))
        assert plus <= 1e-12
        if d > 2:
            assert minus > 1e-3


def test_gxor_qubit_is_cnot():
    cnot = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]])
    np.testing.assert_array_equal(gxor(2).real, cnot)


def test_gxor_action_and_involution():
    out = apply_local(gxor(3), [0, 1], basis_state((3, 3), (2, 1)))
    np.testing.assert_allclose(out.amplitudes, basis_state((3, 3), (2, 1)).amplitudes)
    g = gxor(4)
    np.testing.assert_allclose(g @ g, np.eye(16), atol=1e-12)


@pytest.mark.parametrize("d", range(2, 7))
def test_all_operators_unitary(d):
    for op in (phase_z(d), shift_x(d), fourier(d), gxor(d)):
        assert is_unitary(op)


@pytest.mark.parametrize("d", range(2, 7))
def test_weyl_commutation(d):
    # with X|k> = |k-1>, the phase picked up is on the other side: XZ = w ZX
    z, x = phase_z(d), shift_x(d)
    np.testing.assert_allclose(x @ z, omega(d) * z @ x, atol=1e-12)
    if d > 2:
        assert np.max(np.abs(z @ x - omega(d) * x @ z)) > 1e-3


@pytest.mark.parametrize("d", [1, 0, 2.5])
def test_rejects_bad_dimension(d):
    for make in (phase_z, shift_x, fourier, gxor):
        with pytest.raises(ValueError):
            make(d)


def test_apply_local_basics(rng):
    state = basis_state((3, 3), (0, 0))
    assert np.allclose(apply_local(np.eye(3), [1], state).amplitudes, state.amplitudes)
    np.testing.assert_allclose(apply_local(shift_x(3), [0], state).amplitudes,
                               basis_state((3, 3), (2, 0)).amplitudes)
    v = rng.normal(size=9) + 1j * rng.normal(size=9)
    s = PureState((3, 3), v / np.linalg.norm(v))
    back = apply_local(fourier(3).conj().T, [1], apply_local(fourier(3), [1], s))
    np.testing.assert_allclose(back.amplitudes, s.amplitudes, atol=1e-12)


def test_apply_local_wire_order_matters():
    # operator on wires [1, 0] swaps the control/target roles
    s = basis_state((2, 2), (0, 1))
    out = apply_local(gxor(2), [1, 0], s)
    np.testing.assert_allclose(out.amplitudes, basis_state((2, 2), (1, 1)).amplitudes)


def test_apply_local_errors():
    s = basis_state((2, 3), (0, 0))
    with pytest.raises(ValueError):
        apply_local(np.eye(2), [2], s)
    with pytest.raises(ValueError):
        apply_local(np.eye(2), [1], s)


def test_unitaries_preserve_norm(rng):
    v = rng.normal(size=27) + 1j * rng.normal(size=27)
    s = PureState((3, 3, 3), v / np.linalg.norm(v))
    for op, wires in ((fourier(3), [2]), (gxor(3), [0, 2]), (shift_x(3), [1])):
        s = apply_local(op, wires, s)
        assert abs(s.norm() - 1) < 1e-12


def test_measure_bell_pair():
    s = PureState((2, 2), np.array([1, 0, 0, 1]) / np.sqrt(2))
    results = measure_standard(s, 1)
    assert [k for k, _, _ in results] == [0, 1]
    for k, p, post in results:
        assert p == pytest.approx(0.5)
        np.testing.assert_allclose(post.amplitudes, basis_state((2, 2), (k, k)).amplitudes)


def test_measure_basis_and_ghz():
    (only,) = measure_standard(basis_state((4,), (3,)), 0)
    assert only[0] == 3 and only[1] == pytest.approx(1.0)
    results = measure_standard(ghz_vector(3, (0, 0, 0)), 1)
    assert len(results) == 3
    for k, p, post in results:
        assert p == pytest.approx(1 / 3)
        np.testing.assert_allclose(post.amplitudes, basis_state((3, 3, 3), (k, k, k)).amplitudes, atol=1e-12)


def test_measure_probabilities_sum_to_one(rng):
    for _ in range(5):
        v = rng.normal(size=24) + 1j * rng.normal(size=24)
        s = PureState((2, 3, 4), v / np.linalg.norm(v))
        for w in range(3):
            assert sum(p for _, p, _ in measure_standard(s, w)) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        measure_standard(s, 3)
