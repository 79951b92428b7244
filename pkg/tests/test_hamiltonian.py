import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionkernel import hamiltonian as ham
from ionkernel.linalg import ContractError, is_hermitian

from oracles import ising_hamiltonian


def test_encode_pads_with_zeros():
    np.testing.assert_array_equal(ham.encode_fields([0.3, -0.5], 4), [0.3, -0.5, 0, 0])
    np.testing.assert_array_equal(ham.encode_fields([0.3, -0.5], 2), [0.3, -0.5])


def test_encode_redundant():
    np.testing.assert_array_equal(ham.encode_fields([0.3, -0.5], 4, redundant=True),
                                  [0.3, -0.5, 0.3, -0.5])
    with pytest.raises(ContractError):
        ham.encode_fields([0.3, -0.5], 3, redundant=True)


def test_encode_rejects_long_input():
    with pytest.raises(ContractError):
        ham.encode_fields([1, 2, 3], 2)


def test_single_spin():
    H = ham.build_hamiltonian(ham.IsingParams(1, h=0.7), [0.4])
    np.testing.assert_allclose(H, np.diag([0.28, -0.28]))


def test_pure_coupling_two_spins():
    H = ham.build_hamiltonian(ham.IsingParams(2), [0.0, 0.0])
    sx = np.array([[0, 1], [1, 0]])
    np.testing.assert_array_equal(H, np.kron(sx, sx))
    np.testing.assert_allclose(np.linalg.eigvalsh(H), [-1, -1, 1, 1])


def test_long_range_coupling_value():
    c = ham.coupling_matrix(3, 1.0, 1.13)
    assert c[2, 0] == pytest.approx(2 ** -1.13)
    assert c[2, 0] == pytest.approx(0.45692, abs=5e-6)


@settings(max_examples=30, deadline=None)
@given(N=st.integers(1, 5), seed=st.integers(0, 10**6),
       h=st.floats(-5, 5), J=st.floats(-3, 3), alpha=st.floats(0, 3))
def test_matches_kronecker_oracle(N, seed, h, J, alpha):
    fields = np.random.default_rng(seed).uniform(-1, 1, N)
    H = ham.build_hamiltonian(ham.IsingParams(N, h=h, J=J, alpha=alpha), fields)
    ref = ising_hamiltonian(N, fields, h, J, alpha)
    assert np.max(np.abs(H - ref)) <= 1e-12
    assert is_hermitian(H, 0.0)
    assert H.dtype == np.float64


def test_coupling_decays_with_distance():
    c = ham.coupling_matrix(6, 1.0, 1.13)
    for i in range(6):
        row = [c[i, j] for j in range(i + 1, 6)]
        assert all(a > b for a, b in zip(row, row[1:]))


def test_field_term_is_linear():
    p = ham.IsingParams(3, h=1.3)
    f = np.array([0.2, -0.7, 0.5])
    diff = ham.build_hamiltonian(p, 2.5 * f) - ham.build_hamiltonian(p, f)
    off = diff - np.diag(np.diag(diff))
    assert np.max(np.abs(off)) <= 1e-14
    z = np.diag(ham.build_hamiltonian(p, f)) - np.diag(ham.build_hamiltonian(p, 0 * f))
    np.testing.assert_allclose(np.diag(diff), 1.5 * z, atol=1e-14)


def test_zero_field_has_empty_diagonal():
    H = ham.build_hamiltonian(ham.IsingParams(4), np.zeros(4))
    assert np.all(np.diag(H) == 0)


def test_size_limit():
    with pytest.raises(ContractError):
        ham.coupling_hamiltonian(ham.MAX_QUBITS + 1)


def test_params_validation():
    with pytest.raises(ContractError):
        ham.IsingParams(0)
    with pytest.raises(ContractError):
        ham.IsingParams(2, alpha=-1)
    p = ham.IsingParams(3)
    assert (p.J, p.alpha, p.dim) == (1.0, 1.13, 8)
