import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ionkernel import hamiltonian as ham
from ionkernel import kernels as kn
from ionkernel.linalg import ContractError

from oracles import depolarized_overlap, evolved_state, ising_hamiltonian


def random_inputs(seed, M, d=2):
    return np.random.default_rng(seed).uniform(-1, 1, (M, d))


def test_feature_state_matches_expm_oracle():
    p = ham.IsingParams(2, h=1.0, dt=1.0)
    psi = kn.feature_state(p, [1.0, 1.0])
    ref = evolved_state(ising_hamiltonian(2, [1.0, 1.0]), 1.0)
    assert np.max(np.abs(psi - ref)) <= 1e-10


@settings(max_examples=20, deadline=None)
@given(N=st.integers(1, 5), seed=st.integers(0, 10**6), h=st.floats(0.05, 10), dt=st.floats(0.1, 100))
def test_feature_states_match_oracle(N, seed, h, dt):
    X = random_inputs(seed, 3, d=min(N, 2))
    S = kn.feature_states(ham.IsingParams(N, h=h, dt=dt), X)
    for x, s in zip(X, S):
        ref = evolved_state(ising_hamiltonian(N, ham.encode_fields(x, N), h), dt)
        assert np.max(np.abs(s - ref)) <= 1e-8
        assert abs(np.linalg.norm(s) - 1) <= 1e-12


def test_state_norms_and_chunking():
    p = ham.IsingParams(3, h=0.7, dt=3.0)
    X = random_inputs(1, 10)
    np.testing.assert_allclose(kn.feature_states(p, X, chunk=3), kn.feature_states(p, X), atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(N=st.integers(1, 6), M=st.integers(1, 30), seed=st.integers(0, 10**6),
       h=st.floats(0.1, 10), dt=st.floats(1, 100))
def test_gram_invariants(N, M, seed, h, dt):
    X = random_inputs(seed, M, d=min(N, 2))
    K = kn.quantum_gram(ham.IsingParams(N, h=h, dt=dt), X).values
    assert np.max(np.abs(K - K.T)) <= 1e-12
    assert np.max(np.abs(np.diag(K) - 1)) <= 1e-12
    assert K.min() >= 0 and K.max() <= 1
    assert np.linalg.eigvalsh(K)[0] >= -1e-10


def test_single_qubit_kernel_is_constant():
    X = random_inputs(2, 20, d=1)
    for h, dt in [(0.1, 1.0), (3.0, 17.0), (10.0, 100.0)]:
        K = kn.quantum_gram(ham.IsingParams(1, h=h, dt=dt), X).values
        assert np.max(np.abs(K - 1)) <= 1e-12


def test_scaling_degeneracy():
    X = random_inputs(3, 15)
    a = kn.quantum_gram(ham.IsingParams(4, J=1.0, h=1.3, dt=2.0), X).values
    b = kn.quantum_gram(ham.IsingParams(4, J=0.5, h=0.65, dt=4.0), X).values
    assert np.max(np.abs(a - b)) <= 1e-10


def test_identical_inputs_give_unit_kernel():
    K = kn.quantum_gram(ham.IsingParams(3, h=2.0, dt=5.0), [[0.2, 0.4], [0.2, 0.4]]).values
    np.testing.assert_allclose(K, np.ones((2, 2)), atol=1e-12)


def test_cross_gram_matches_square_blocks():
    p = ham.IsingParams(3, h=0.8, dt=4.0)
    X, Y = random_inputs(4, 6), random_inputs(5, 4)
    full = kn.quantum_gram(p, np.vstack([X, Y])).values
    cross = kn.quantum_gram(p, Y, X)
    assert cross.shape == (4, 6) and not cross.meta["symmetric"]
    np.testing.assert_allclose(cross.values, full[6:, :6], atol=1e-12)


def test_spectral_cache_reuses_diagonalization():
    X = random_inputs(6, 8)
    cache = kn.SpectralCache(X, 3)
    first = cache.eigensystems(1.5)
    assert cache.eigensystems(1.5) is first
    a = kn.fidelity_from_states(cache.states(1.5, 2.0))
    b = kn.quantum_gram(ham.IsingParams(3, h=1.5, dt=2.0), X).values
    np.testing.assert_allclose(np.minimum(a, 1), b, atol=1e-13)


def test_rbf_gram():
    K = kn.rbf_gram(0.5, [[0.0, 0.0], [1.0, 1.0]])
    np.testing.assert_allclose(K.values, [[1, np.exp(-1)], [np.exp(-1), 1]])
    assert K.kind == "rbf"
    assert np.all(kn.rbf_gram(0.0, random_inputs(0, 5)).values == 1)
    with pytest.raises(ContractError):
        kn.rbf_gram(-1.0, [[0.0]])


def test_depolarize_example():
    out = kn.depolarize(np.array([[1.0]]), 0.1, 2).values[0, 0]
    assert out == pytest.approx(0.81 + 0.1 * 1.9 / 4, abs=1e-15)
    assert out == pytest.approx(0.8575, abs=1e-15)


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_depolarize_matches_density_matrices(N):
    rng = np.random.default_rng(N)
    X = rng.uniform(-1, 1, (10, min(N, 2)))
    params = ham.IsingParams(N, h=1.7, dt=3.0)
    S = kn.feature_states(params, X)
    K = kn.quantum_gram(params, X)
    for p in (0.0, 0.01, 0.1, 0.5, 1.0):
        Kd = kn.depolarize(K, p, N).values
        for i in range(10):
            for j in range(10):
                assert abs(Kd[i, j] - depolarized_overlap(S[i], S[j], p)) <= 1e-12


def test_depolarize_limits():
    K = np.array([[1.0, 0.3], [0.3, 1.0]])
    np.testing.assert_array_equal(kn.depolarize(K, 0.0, 3).values, K)
    np.testing.assert_allclose(kn.depolarize(K, 1.0, 3).values, np.full((2, 2), 1 / 8))
    with pytest.raises(ContractError):
        kn.depolarize(K, 1.5, 3)


def test_noise_zero_is_identity():
    K = kn.KernelMatrix(np.eye(3))
    np.testing.assert_array_equal(kn.add_statistical_noise(K, 0.0, seed=1).values, np.eye(3))


def test_noise_statistics():
    K = np.zeros((333, 333))
    noisy = kn.add_statistical_noise(K, 0.1, seed=42).values
    iu = np.triu_indices(333, 1)
    assert 0.09 <= noisy[iu].std() <= 0.11
    assert abs(noisy[iu].mean()) <= 0.005
    np.testing.assert_array_equal(noisy, noisy.T)
    assert np.any(np.diag(noisy) != 0)


def test_noise_diagonal_option_and_rectangular():
    K = np.ones((4, 4))
    out = kn.add_statistical_noise(K, 0.1, seed=0, diagonal=False).values
    np.testing.assert_array_equal(np.diag(out), 1.0)
    rect = kn.add_statistical_noise(np.zeros((3, 5)), 0.1, seed=0).values
    assert rect.shape == (3, 5) and np.all(rect != 0)


def test_noise_is_reproducible():
    K = np.zeros((5, 5))
    a = kn.add_statistical_noise(K, 0.1, seed=7).values
    np.testing.assert_array_equal(a, kn.add_statistical_noise(K, 0.1, seed=7).values)
    assert not np.array_equal(a, kn.add_statistical_noise(K, 0.1, seed=8).values)


def test_shift_example():
    out, lam = kn.shift_regularize(np.array([[1.0, -2.0], [-2.0, 1.0]]))
    assert lam == pytest.approx(-1.0)
    np.testing.assert_allclose(out.values, [[2, -2], [-2, 2]])
    assert out.kind == "shifted"


@settings(max_examples=30, deadline=None)
@given(M=st.integers(2, 40), seed=st.integers(0, 10**6), s=st.floats(0.001, 0.5))
def test_shift_makes_psd_and_is_idempotent(M, seed, s):
    K = kn.add_statistical_noise(np.eye(M), s, seed=seed)
    once, _ = kn.shift_regularize(K)
    assert np.linalg.eigvalsh(once.values)[0] >= -1e-10
    twice, _ = kn.shift_regularize(once)
    assert np.max(np.abs(twice.values - once.values)) <= 1e-10


def test_shift_leaves_psd_input_alone():
    K = kn.quantum_gram(ham.IsingParams(3, h=1.0, dt=2.0), random_inputs(0, 12))
    out, lam = kn.shift_regularize(K)
    assert lam >= -1e-10
    np.testing.assert_array_equal(out.values, K.values)
    with pytest.raises(ContractError):
        kn.shift_regularize(np.ones((2, 3)))


def test_noise_params():
    assert kn.NoiseParams(s=0.1).shots == pytest.approx(100)
    assert kn.NoiseParams().shots == float("inf")
    with pytest.raises(ContractError):
        kn.NoiseParams(p=2)
    assert set(kn.NOISE_PRESETS) == {"low", "high-s", "high-p", "high"}


def test_kernel_matrix_validation():
    with pytest.raises(ContractError):
        kn.KernelMatrix(np.ones(3))
    with pytest.raises(ContractError):
        kn.KernelMatrix(np.ones((2, 2)), kind="mystery")
    K = kn.KernelMatrix(np.arange(9.0).reshape(3, 3), "rbf", {"gamma": 1.0})
    np.testing.assert_array_equal(K.block([0, 2], [1]).values, [[1.0], [7.0]])
    np.testing.assert_array_equal(np.asarray(K), K.values)


def test_save_and_load_round_trip(tmp_path):
    K = kn.depolarize(kn.quantum_gram(ham.IsingParams(2, h=0.3, dt=7.0), random_inputs(9, 5)), 0.1, 2)
    path = kn.save_kernel(K, tmp_path / "gram.csv")
    back = kn.load_kernel(path)
    np.testing.assert_array_equal(back.values, K.values)
    assert back.kind == "depolarized" and back.meta["p"] == 0.1
    info = json.loads((tmp_path / "gram.json").read_text())
    assert info["shape"] == [5, 5]
    np.savetxt(tmp_path / "bare.csv", np.eye(2), delimiter=",")
    assert kn.load_kernel(tmp_path / "bare.csv").kind == "custom"
