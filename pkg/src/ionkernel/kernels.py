"""Quantum fidelity kernels, the RBF baseline, analytic noise and the shift fix.

The quantum feature map sends a scaled input ``x`` to

    |psi(x)> = exp(-i H(x) dt) |0...0>

and the kernel is the fidelity ``|<psi(y)|psi(x)>|**2``. Gram matrices are
assembled from cached states rather than from composed unitaries; the two
are mathematically identical.
"""
from __future__ import annotations

import json
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import hamiltonian as ham
from .linalg import PSD_TOL, ContractError, EigenDecomposition, hermitian_eig, lowest_eigenvalue
from .rng import make_rng

KINDS = ("noiseless-quantum", "depolarized", "sampled-noisy", "shifted", "rbf", "custom")


@dataclass
class KernelMatrix:
    """Real kernel values with a record of how they were produced.

    ``np.asarray(K)`` returns the underlying values, so a ``KernelMatrix``
    can be passed anywhere an array is expected.
    """

    values: np.ndarray
    kind: str = "custom"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ContractError(f"kernel matrix must be 2-D, got shape {self.values.shape}")
        if self.kind not in KINDS:
            raise ContractError(f"unknown kernel kind {self.kind!r}")

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def shape(self):
        return self.values.shape

    @property
    def is_square(self) -> bool:
        return self.values.shape[0] == self.values.shape[1]

    def replace(self, values, kind: str, **meta) -> "KernelMatrix":
        return KernelMatrix(values, kind, {**self.meta, **meta})

    def block(self, rows, cols) -> "KernelMatrix":
        return KernelMatrix(self.values[np.ix_(rows, cols)], self.kind, dict(self.meta))


@dataclass(frozen=True)
class NoiseParams:
    """Depolarizing probability ``p`` and kernel-entry noise level ``s``."""

    p: float = 0.0
    s: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ContractError(f"depolarizing probability must lie in [0, 1], got {self.p}")
        if not self.s >= 0.0:
            raise ContractError(f"noise stddev must be non-negative, got {self.s}")

    @property
    def shots(self) -> float:
        """Shot count equivalent to ``s`` under ``s ~ 1/sqrt(V)``."""
        return float("inf") if self.s == 0 else 1.0 / self.s**2


NOISE_PRESETS = {
    "low": NoiseParams(p=0.01, s=0.01),
    "high-s": NoiseParams(p=0.01, s=0.1),
    "high-p": NoiseParams(p=0.1, s=0.01),
    "high": NoiseParams(p=0.1, s=0.1),
}


def _as_inputs(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0:
        raise ContractError(f"expected a non-empty (n_samples, n_features) array, got shape {X.shape}")
    return X


class SpectralCache:
    """Eigensystems of ``H(x)`` for a fixed input set, keyed by field strength.

    The evolution time enters only through phases, so one batched
    diagonalization per ``h`` serves every ``dt`` of a sweep. ``J`` enters
    the coupling part and is part of the cache identity.
    """

    def __init__(self, X, N: int, J: float = 1.0, alpha: float = 1.13,
                 redundant: bool = False, max_entries: int = 4):
        self.X = _as_inputs(X)
        self.N = N
        self.J = J
        self.alpha = alpha
        self.fields = ham.encode_fields(self.X, N, redundant=redundant)
        self._coupling = ham.coupling_hamiltonian(N, J, alpha)
        self._cache: OrderedDict[float, EigenDecomposition] = OrderedDict()
        self.max_entries = max_entries

    def eigensystems(self, h: float) -> EigenDecomposition:
        h = float(h)
        if h in self._cache:
            self._cache.move_to_end(h)
            return self._cache[h]
        H = np.broadcast_to(self._coupling, (len(self.X),) + self._coupling.shape).copy()
        diag = ham.field_diagonal(self.fields, h)
        idx = np.arange(self._coupling.shape[0])
        H[:, idx, idx] += diag
        eig = hermitian_eig(H, check=False)
        self._cache[h] = eig
        while len(self._cache) > self.max_entries:
            self._cache.popitem(last=False)
        return eig

    def states(self, h: float, dt: float) -> np.ndarray:
        """``(n_inputs, 2**N)`` array of evolved states ``exp(-i H(x) dt)|0>``."""
        w, v = self.eigensystems(h)
        # <k|0> for each eigenvector k is the first row of V
        coeffs = np.exp(-1j * w * dt) * v[:, 0, :]
        return np.einsum("mak,mk->ma", v, coeffs)


def feature_states(p: ham.IsingParams, X, redundant: bool = False, chunk: int = 2048) -> np.ndarray:
    """Feature states for every row of ``X``, processed in chunks to bound memory."""
    X = _as_inputs(X)
    out = np.empty((len(X), p.dim), dtype=complex)
    for start in range(0, len(X), chunk):
        cache = SpectralCache(X[start:start + chunk], p.N, p.J, p.alpha, redundant, max_entries=1)
        out[start:start + chunk] = cache.states(p.h, p.dt)
    return out


def feature_state(p: ham.IsingParams, x, redundant: bool = False) -> np.ndarray:
    """``exp(-i H(x) dt) |0...0>`` for a single input vector."""
    return feature_states(p, np.atleast_2d(np.asarray(x, dtype=float)), redundant)[0]


def fidelity_from_states(SX: np.ndarray, SY: np.ndarray | None = None) -> np.ndarray:
    """``K[i, j] = |<y_j|x_i>|**2`` from stacked state vectors."""
    ov = SX @ np.conj(SX if SY is None else SY).T
    K = ov.real**2 + ov.imag**2
    if SY is None:
        K = 0.5 * (K + K.T)
    return K


def quantum_gram(p: ham.IsingParams, X, Y=None, redundant: bool = False) -> KernelMatrix:
    """Noiseless fidelity kernel between the rows of ``X`` and ``Y`` (default ``X``)."""
    SX = feature_states(p, X, redundant)
    SY = None if Y is None else feature_states(p, Y, redundant)
    K = fidelity_from_states(SX, SY)
    np.minimum(K, 1.0, out=K)
    meta = dict(N=p.N, J=p.J, alpha=p.alpha, h=p.h, dt=p.dt, redundant=redundant,
                symmetric=Y is None)
    return KernelMatrix(K, "noiseless-quantum", meta)


def rbf_gram(gamma: float, X, Y=None) -> KernelMatrix:
    """``exp(-gamma ||x_i - y_j||**2)``; ``gamma = 0`` gives all ones."""
    if gamma < 0:
        raise ContractError(f"gamma must be non-negative, got {gamma}")
    X = _as_inputs(X)
    Yv = X if Y is None else _as_inputs(Y)
    if X.shape[1] != Yv.shape[1]:
        raise ContractError(f"feature counts differ: {X.shape[1]} vs {Yv.shape[1]}")
    sq = np.sum(X**2, axis=1)[:, None] + np.sum(Yv**2, axis=1)[None, :] - 2.0 * X @ Yv.T
    np.maximum(sq, 0.0, out=sq)
    if Y is None:
        np.fill_diagonal(sq, 0.0)
        sq = 0.5 * (sq + sq.T)
    return KernelMatrix(np.exp(-gamma * sq), "rbf", dict(gamma=gamma, symmetric=Y is None))


def depolarize(K, p: float, N: int) -> KernelMatrix:
    """Kernel between depolarized states: ``(1-p)**2 K + p(2-p)/2**N``."""
    if not 0.0 <= p <= 1.0:
        raise ContractError(f"depolarizing probability must lie in [0, 1], got {p}")
    Km = K if isinstance(K, KernelMatrix) else KernelMatrix(K)
    vals = (1.0 - p) ** 2 * Km.values + p * (2.0 - p) / 2.0**N
    return Km.replace(vals, "depolarized", p=p, N=N)


def add_statistical_noise(K, s: float, seed=None, diagonal: bool = True,
                          symmetric: bool | None = None) -> KernelMatrix:
    """Add Gaussian shot noise of standard deviation ``s`` to every entry.

    For a symmetric Gram the same draw is used for ``(i, j)`` and ``(j, i)``;
    rectangular or explicitly non-symmetric kernels get i.i.d. noise per
    entry. ``diagonal=False`` leaves the diagonal of a square Gram untouched.
    """
    if not s >= 0:
        raise ContractError(f"noise stddev must be non-negative, got {s}")
    Km = K if isinstance(K, KernelMatrix) else KernelMatrix(K)
    if s == 0:
        return Km.replace(Km.values.copy(), Km.kind)
    vals = Km.values
    if symmetric is None:
        symmetric = Km.is_square and Km.meta.get("symmetric", np.array_equal(vals, vals.T))
    rng = make_rng(seed)
    xi = rng.normal(0.0, s, size=vals.shape)
    if symmetric:
        upper = np.triu(xi, 1)
        xi = upper + upper.T + np.diag(np.diag(xi))
    if not diagonal and Km.is_square:
        np.fill_diagonal(xi, 0.0)
    return Km.replace(vals + xi, "sampled-noisy", s=s, seed=seed, noise_diagonal=diagonal)


def shift_regularize(K) -> tuple[KernelMatrix, float]:
    """Lift a symmetric matrix to PSD by subtracting its negative minimum eigenvalue.

    Eigenvalues down to ``-PSD_TOL`` count as rounding noise of a PSD
    matrix, so such inputs pass through unchanged. Returns the (possibly
    unchanged) matrix and the minimum eigenvalue of the input.
    """
    Km = K if isinstance(K, KernelMatrix) else KernelMatrix(K)
    if not Km.is_square:
        raise ContractError(f"shift needs a square matrix, got shape {Km.shape}")
    lam = lowest_eigenvalue(Km.values)
    if lam < -PSD_TOL:
        vals = Km.values - lam * np.eye(Km.shape[0])
        return Km.replace(vals, "shifted", lambda_min=lam, shifted=True), lam
    return Km.replace(Km.values, Km.kind, lambda_min=lam, shifted=False), lam


def _jsonable(meta: dict) -> dict:
    out = {}
    for k, v in meta.items():
        if isinstance(v, np.generic):
            v = v.item()
        out[k] = v
    return out


def save_kernel(K, path) -> Path:
    """Write the kernel as a plain CSV grid plus a ``.json`` sidecar with kind and metadata."""
    Km = K if isinstance(K, KernelMatrix) else KernelMatrix(K)
    path = Path(path)
    np.savetxt(path, Km.values, delimiter=",", fmt="%.17g")
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps({"kind": Km.kind, "shape": list(Km.shape),
                                   "meta": _jsonable(Km.meta)}, indent=2))
    return path


def load_kernel(path) -> KernelMatrix:
    path = Path(path)
    vals = np.loadtxt(path, delimiter=",", ndmin=2)
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        info = json.loads(sidecar.read_text())
        return KernelMatrix(vals, info.get("kind", "custom"), info.get("meta", {}))
    return KernelMatrix(vals)
