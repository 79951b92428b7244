"""Transverse-field Ising chain with power-law couplings and input-encoded fields.

The Hamiltonian for an ``N``-ion chain with open boundaries is

    H(x) = sum_{i>j} J / |i-j|**alpha  X_i X_j  +  h sum_i x_i Z_i

Site 0 is the leftmost tensor factor (most significant bit of the basis
index). The matrix is real symmetric in the computational basis.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import ContractError

MAX_QUBITS = 12


@dataclass(frozen=True)
class IsingParams:
    """Chain size, couplings and evolution time of the encoding dynamics."""

    N: int
    h: float = 1.0
    dt: float = 1.0
    J: float = 1.0
    alpha: float = 1.13

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ContractError(f"N must be a positive integer, got {self.N}")
        if not self.alpha >= 0:
            raise ContractError(f"alpha must be non-negative, got {self.alpha}")
        for name in ("J", "h", "dt", "alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ContractError(f"{name} must be finite")

    @property
    def dim(self) -> int:
        return 2**self.N


def encode_fields(x, N: int, redundant: bool = False) -> np.ndarray:
    """Map an input vector onto the ``N`` on-site field multipliers.

    Features fill the first sites and the rest of the chain gets zero field.
    With ``redundant=True`` and ``N`` a multiple of the feature count the
    input is repeated along the chain instead.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    n_feat = x.shape[-1]
    if n_feat > N:
        raise ContractError(f"{n_feat} features do not fit on a chain of {N} sites")
    if redundant:
        if N % n_feat:
            raise ContractError(f"redundant encoding needs N ({N}) to be a multiple of {n_feat}")
        return np.tile(x, N // n_feat)
    pad = [(0, 0)] * (x.ndim - 1) + [(0, N - n_feat)]
    return np.pad(x, pad)


def coupling_matrix(N: int, J: float = 1.0, alpha: float = 1.13) -> np.ndarray:
    """Site-site couplings ``J / |i-j|**alpha`` (zero diagonal)."""
    idx = np.arange(N)
    dist = np.abs(idx[:, None] - idx[None, :]).astype(float)
    with np.errstate(divide="ignore"):
        c = J / dist**alpha
    np.fill_diagonal(c, 0.0)
    return c


def z_eigenvalues(N: int) -> np.ndarray:
    """``(2**N, N)`` table of the Z_i eigenvalue (+1/-1) on every basis state."""
    b = np.arange(2**N)[:, None]
    bits = (b >> (N - 1 - np.arange(N))[None, :]) & 1
    return 1.0 - 2.0 * bits


def _check_size(N: int) -> None:
    if N > MAX_QUBITS:
        raise ContractError(f"N={N} exceeds the configured maximum of {MAX_QUBITS} qubits")


def coupling_hamiltonian(N: int, J: float = 1.0, alpha: float = 1.13) -> np.ndarray:
    """Input-independent ``sum_{i>j} J_ij X_i X_j`` part as a dense real matrix."""
    _check_size(N)
    dim = 2**N
    out = np.zeros((dim, dim))
    c = coupling_matrix(N, J, alpha)
    rows = np.arange(dim)
    for i in range(N):
        for j in range(i):
            mask = (1 << (N - 1 - i)) | (1 << (N - 1 - j))
            out[rows, rows ^ mask] += c[i, j]
    return out


def field_diagonal(fields, h: float) -> np.ndarray:
    """Diagonal of ``h sum_i fields_i Z_i``; accepts a stack of field vectors."""
    fields = np.asarray(fields, dtype=float)
    N = fields.shape[-1]
    _check_size(N)
    return h * fields @ z_eigenvalues(N).T


def build_hamiltonian(p: IsingParams, fields) -> np.ndarray:
    """Dense ``H(x)`` for one field vector of length ``p.N``."""
    fields = np.asarray(fields, dtype=float)
    if fields.shape != (p.N,):
        raise ContractError(f"expected {p.N} fields, got shape {fields.shape}")
    H = coupling_hamiltonian(p.N, p.J, p.alpha)
    H[np.diag_indices_from(H)] += field_diagonal(fields, p.h)
    return H
