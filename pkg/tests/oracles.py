"""Reference computations that share no code path with the package."""
import warnings
from functools import reduce

import numpy as np
import scipy.linalg
import scipy.optimize

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def pauli_string(ops: dict, N: int) -> np.ndarray:
    return reduce(np.kron, [ops.get(k, I2) for k in range(N)])


def ising_hamiltonian(N, fields, h=1.0, J=1.0, alpha=1.13):
    """Textbook construction from explicit Kronecker products."""
    H = np.zeros((2**N, 2**N), dtype=complex)
    for i in range(N):
        for j in range(i):
            H += J / abs(i - j) ** alpha * pauli_string({i: SX, j: SX}, N)
    for i in range(N):
        H += h * fields[i] * pauli_string({i: SZ}, N)
    return H


def evolved_state(H, dt):
    """``expm(-i H dt)|0>`` with scipy's Pade exponential."""
    psi0 = np.zeros(H.shape[0], dtype=complex)
    psi0[0] = 1
    return scipy.linalg.expm(-1j * H * dt) @ psi0


def depolarized_overlap(psi, phi, p):
    """``tr(rho~ sigma~)`` from explicit density matrices."""
    d = len(psi)
    rho = (1 - p) * np.outer(psi, psi.conj()) + p * np.eye(d) / d
    sig = (1 - p) * np.outer(phi, phi.conj()) + p * np.eye(d) / d
    return np.trace(rho @ sig).real


def qp_dual(K, y, C):
    """Maximize the SVM dual with scipy's SLSQP; returns (alpha, objective)."""
    y = np.asarray(y, float)
    Q = np.outer(y, y) * np.asarray(K, float)
    M = len(y)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        res = scipy.optimize.minimize(
            lambda a: 0.5 * a @ Q @ a - a.sum(), np.zeros(M), jac=lambda a: Q @ a - 1,
            bounds=[(0, C)] * M,
            constraints=[{"type": "eq", "fun": lambda a: y @ a, "jac": lambda a: y}],
            method="SLSQP", options={"ftol": 1e-15, "maxiter": 2000})
    a = np.clip(res.x, 0, C)
    return a, a.sum() - 0.5 * a @ Q @ a


def qp_bias(a, K, y, C):
    """Bias from the KKT conditions of a dual solution."""
    y = np.asarray(y, float)
    f = K @ (a * y)
    free = (a > 1e-6 * C) & (a < C * (1 - 1e-6))
    if free.any():
        return float(np.mean(y[free] - f[free]))
    up = ((y > 0) & (a < C * (1 - 1e-6))) | ((y < 0) & (a > 1e-6 * C))
    lo = ((y < 0) & (a < C * (1 - 1e-6))) | ((y > 0) & (a > 1e-6 * C))
    r = y - f
    return float(0.5 * (r[up].max() + r[lo].min())) if up.any() and lo.any() else float(np.mean(r))
