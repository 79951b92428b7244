"""Dense complex linear algebra for small Hilbert spaces.

Everything here works on plain numpy arrays. Dimensions are at most a few
thousand (2**N for N <= ~10 qubits), so exact dense methods are used
throughout and the matrix exponential is always formed from an
eigendecomposition.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
import scipy.linalg

# Absolute max-norm tolerances, shared by the whole package.
HERMITIAN_TOL = 1e-12
NORM_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10
PSD_TOL = 1e-10


class ContractError(ValueError):
    """Raised when an input violates a documented precondition."""


class EigenDecomposition(NamedTuple):
    """Eigenvalues in ascending order and the matching unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _check_square(a: np.ndarray, name: str = "matrix") -> None:
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise ContractError(f"{name} must be square, got shape {a.shape}")


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        return False
    return bool(np.max(np.abs(a - np.conj(np.swapaxes(a, -1, -2))), initial=0.0) <= tol)


def hermitian_eig(a, check: bool = True) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian (or real symmetric) matrix.

    Stacked input of shape ``(..., d, d)`` is decomposed matrix by matrix.

    Args:
        a: Hermitian matrix or stack of matrices.
        check: Verify squareness and Hermiticity before decomposing.

    Returns:
        ``EigenDecomposition`` with ascending eigenvalues; real input gives
        real orthogonal eigenvectors.

    Raises:
        ContractError: if the input is not square or not Hermitian within
            ``HERMITIAN_TOL``.
    """
    a = np.asarray(a)
    if check:
        _check_square(a)
        if not is_hermitian(a):
            raise ContractError("matrix is not Hermitian within tolerance")
    w, v = np.linalg.eigh(a)
    return EigenDecomposition(w, v)


def lowest_eigenvalue(a) -> float:
    """Smallest eigenvalue of a real symmetric or Hermitian matrix."""
    a = np.asarray(a)
    _check_square(a)
    if a.shape[0] == 0:
        raise ContractError("empty matrix has no eigenvalues")
    return float(scipy.linalg.eigh(a, eigvals_only=True, subset_by_index=[0, 0])[0])


def propagator(eig: EigenDecomposition, dt: float) -> np.ndarray:
    """``exp(-i H dt)`` assembled from a precomputed eigendecomposition of ``H``."""
    w, v = eig
    phases = np.exp(-1j * w * dt)
    return (v * phases[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))


def evolve(h, dt: float, psi, eig: EigenDecomposition | None = None) -> np.ndarray:
    """Apply ``exp(-i H dt)`` to a state vector.

    Computed as ``V diag(exp(-i lambda dt)) V^dagger psi``. A decomposition
    of ``h`` may be passed in to skip recomputing it.
    """
    h = np.asarray(h)
    psi = np.asarray(psi, dtype=complex)
    _check_square(h, "Hamiltonian")
    if psi.ndim != 1 or psi.shape[0] != h.shape[0]:
        raise ContractError(
            f"state of shape {psi.shape} does not match Hamiltonian of dim {h.shape[0]}"
        )
    if eig is None:
        eig = hermitian_eig(h)
    w, v = eig
    coeffs = np.conj(v.T) @ psi
    return v @ (np.exp(-1j * w * dt) * coeffs)


def overlap(a, b) -> complex:
    """Inner product ``<a|b>``, conjugate-linear in the first argument."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ContractError(f"cannot take overlap of shapes {a.shape} and {b.shape}")
    return complex(np.vdot(a, b))


def basis_state(dim: int, index: int = 0) -> np.ndarray:
    """Computational basis vector ``|index>`` of dimension ``dim``."""
    if dim < 1 or not 0 <= index < dim:
        raise ContractError(f"invalid basis index {index} for dimension {dim}")
    psi = np.zeros(dim, dtype=complex)
    psi[index] = 1.0
    return psi
