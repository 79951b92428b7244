"""Benchmark tasks: noisy circles, noisy moons and the ad hoc quantum dataset.

Conventions:

* circles: outer circle is labelled -1, inner circle +1;
* moons: first (upper) moon is labelled +1, second moon -1;
* ad hoc: label is the sign of a parity measurement after a fixed random
  unitary, points within the gap are rejected.

Every generator is a pure function of its arguments and seed.
"""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

from .linalg import ContractError
from .rng import make_rng

TASKS = ("circles", "moons", "adhoc")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    name: str = "external"
    params: dict = field(default_factory=dict)
    raw: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=int)
        if self.X.ndim != 2 or len(self.X) != len(self.y):
            raise ContractError(f"inconsistent dataset shapes {self.X.shape} and {self.y.shape}")
        if self.raw is None:
            self.raw = self.X.copy()

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return replace(self, X=self.X[idx], y=self.y[idx], raw=self.raw[idx])

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.y == 1)), int(np.sum(self.y == -1))


@dataclass
class SplitDataset:
    train: Dataset
    validation: Dataset
    test: Dataset

    def parts(self):
        return self.train, self.validation, self.test


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ContractError(f"number of points must be a positive even number, got {n}")


def _shuffle(X, y, rng):
    perm = rng.permutation(len(y))
    return X[perm], y[perm]


def make_circles(n: int = 1000, noise: float = 0.2, factor: float = 0.5, seed=0) -> Dataset:
    """Two concentric circles, ``n/2`` evenly spaced points on each, plus Gaussian jitter."""
    _check_even(n)
    if not 0 < factor < 1:
        raise ContractError(f"factor must lie in (0, 1), got {factor}")
    rng = make_rng(seed)
    half = n // 2
    theta = np.linspace(0.0, 2 * np.pi, half, endpoint=False)
    outer = np.column_stack([np.cos(theta), np.sin(theta)])
    inner = factor * outer
    X = np.vstack([outer, inner])
    y = np.concatenate([-np.ones(half, int), np.ones(half, int)])
    if noise > 0:
        X = X + rng.normal(0.0, noise, size=X.shape)
    X, y = _shuffle(X, y, rng)
    return Dataset(X, y, "circles", dict(n=n, noise=noise, factor=factor, seed=seed))


def make_moons(n: int = 1000, noise: float = 0.3, seed=0) -> Dataset:
    """Two interleaving half circles: ``(cos t, sin t)`` and ``(1 - cos t, 0.5 - sin t)``."""
    _check_even(n)
    rng = make_rng(seed)
    half = n // 2
    theta = np.linspace(0.0, np.pi, half)
    first = np.column_stack([np.cos(theta), np.sin(theta)])
    second = np.column_stack([1.0 - np.cos(theta), 0.5 - np.sin(theta)])
    X = np.vstack([first, second])
    y = np.concatenate([np.ones(half, int), -np.ones(half, int)])
    if noise > 0:
        X = X + rng.normal(0.0, noise, size=X.shape)
    X, y = _shuffle(X, y, rng)
    return Dataset(X, y, "moons", dict(n=n, noise=noise, seed=seed))


_Z = np.array([1.0, -1.0])
_ZZ = np.kron(_Z, _Z)
_H2 = np.kron(np.array([[1, 1], [1, -1]]), np.array([[1, 1], [1, -1]])) / 2.0


def adhoc_feature_states(X) -> np.ndarray:
    """Two-qubit second-order Pauli-Z feature map states for inputs in ``[0, 2pi)**2``.

    ``|Phi(x)> = U(x) H U(x) H |00>`` with the diagonal
    ``U(x) = exp(i [x1 Z1 + x2 Z2 + (pi - x1)(pi - x2) Z1 Z2])``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z1 = np.kron(_Z, [1.0, 1.0])
    z2 = np.kron([1.0, 1.0], _Z)
    phase = (X[:, :1] * z1 + X[:, 1:2] * z2
             + ((np.pi - X[:, 0]) * (np.pi - X[:, 1]))[:, None] * _ZZ)
    u = np.exp(1j * phase)
    psi = np.zeros((len(X), 4), dtype=complex)
    psi[:, 0] = 1.0
    psi = u * (psi @ _H2.T)
    psi = u * (psi @ _H2.T)
    return psi


def adhoc_observable(seed=0) -> np.ndarray:
    """``V^dagger (Z x Z) V`` for the seed-derived Haar-random unitary ``V``."""
    V = unitary_group.rvs(4, random_state=make_rng(seed, 0))
    return np.conj(V.T) @ np.diag(_ZZ) @ V


def adhoc_margin(X, seed=0) -> np.ndarray:
    """Parity expectation ``m(x)``; its sign is the ad hoc label."""
    psi = adhoc_feature_states(X)
    O = adhoc_observable(seed)
    return np.einsum("ma,ab,mb->m", np.conj(psi), O, psi).real


def make_adhoc(n: int = 1000, gap: float = 0.3, seed=0, max_draws: int | None = None) -> Dataset:
    """Rejection-sample a balanced ad hoc dataset with separation gap ``gap``.

    Candidate points are uniform on ``[0, 2pi)**2``; a point is kept with
    label ``sign(m(x))`` only when ``|m(x)| >= gap`` and its class is not full.

    Raises:
        ContractError: if fewer than one in a thousand candidates is
            accepted or the sampling cap is reached.
    """
    _check_even(n)
    if not 0 < gap < 1:
        raise ContractError(f"gap must lie in (0, 1), got {gap}")
    rng = make_rng(seed, 1)
    O = adhoc_observable(seed)
    if max_draws is None:
        max_draws = 1000 * n
    half = n // 2
    kept = {1: [], -1: []}
    draws = accepted = 0
    batch = max(256, n)
    while (len(kept[1]) < half or len(kept[-1]) < half) and draws < max_draws:
        cand = rng.uniform(0.0, 2 * np.pi, size=(batch, 2))
        psi = adhoc_feature_states(cand)
        m = np.einsum("ma,ab,mb->m", np.conj(psi), O, psi).real
        for x, mv in zip(cand, m):
            draws += 1
            if abs(mv) >= gap:
                accepted += 1
                lab = 1 if mv > 0 else -1
                if len(kept[lab]) < half:
                    kept[lab].append(x)
            if draws >= max_draws:
                break
        if draws >= 10_000 and accepted / draws < 1e-3:
            raise ContractError(
                f"ad hoc acceptance rate {accepted / draws:.2e} is too low for gap {gap}")
    if len(kept[1]) < half or len(kept[-1]) < half:
        raise ContractError(f"ad hoc sampling cap of {max_draws} draws reached")
    X = np.vstack([np.array(kept[1]), np.array(kept[-1])])
    y = np.concatenate([np.ones(half, int), -np.ones(half, int)])
    X, y = _shuffle(X, y, rng)
    return Dataset(X, y, "adhoc", dict(n=n, gap=gap, seed=seed,
                                       acceptance=accepted / max(draws, 1)))


def make_task(task: str, n: int = 1000, seed=0, noise: float | None = None,
              factor: float = 0.5, gap: float = 0.3) -> Dataset:
    """Generate one of the benchmark tasks with its default noise level."""
    if task == "circles":
        return make_circles(n, 0.2 if noise is None else noise, factor, seed)
    if task == "moons":
        return make_moons(n, 0.3 if noise is None else noise, seed)
    if task == "adhoc":
        return make_adhoc(n, gap, seed)
    raise ContractError(f"unknown task {task!r}; expected one of {TASKS}")


class FeatureScaler:
    """Per-feature affine map of the fitted ``[min, max]`` onto ``[-1, 1]``.

    Values outside the fitted range are clamped. A constant feature maps to
    0 and sets ``degenerate``.
    """

    def __init__(self):
        self.low = None
        self.high = None
        self.degenerate = np.zeros(0, dtype=bool)

    def fit(self, X) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            raise ContractError("cannot fit a scaler on an empty dataset")
        self.low = X.min(axis=0)
        self.high = X.max(axis=0)
        self.degenerate = self.high <= self.low
        if self.degenerate.any():
            warnings.warn(f"constant feature(s) {np.flatnonzero(self.degenerate).tolist()} map to 0")
        return self

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        span = np.where(self.degenerate, 1.0, self.high - self.low)
        out = 2.0 * (X - self.low) / span - 1.0
        out[:, self.degenerate] = 0.0
        return np.clip(out, -1.0, 1.0)

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}


def scale_features(d: Dataset, scaler: FeatureScaler | None = None) -> Dataset:
    """Map features to ``[-1, 1]`` with ``scaler`` (fitted on ``d`` when omitted)."""
    if len(d) == 0:
        raise ContractError("cannot scale an empty dataset")
    if scaler is None:
        scaler = FeatureScaler().fit(d.X)
    params = {**d.params, "scaling": scaler.to_dict()}
    return replace(d, X=scaler.transform(d.X), params=params)


def scale_split(s: SplitDataset) -> SplitDataset:
    """Fit the scaling on the training part and apply it to all three parts."""
    scaler = FeatureScaler().fit(s.train.X)
    return SplitDataset(*(scale_features(p, scaler) for p in s.parts()))


def split(d: Dataset, sizes=(333, 333, 333), seed=0) -> SplitDataset:
    """Stratified train/validation/test partition.

    Each part gets half of its points from each class. Odd-sized parts get
    one extra point: the first ``ceil(k/2)`` of the ``k`` odd parts take it
    from class +1, the rest from class -1. For three 333-point parts of a
    balanced 1000-point set this gives train and validation a +1 majority
    of one point and the test part a -1 majority of one point.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) != 3 or min(sizes) < 1:
        raise ContractError(f"need three positive part sizes, got {sizes}")
    if sum(sizes) > len(d):
        raise ContractError(f"requested {sum(sizes)} points from a dataset of {len(d)}")
    rng = make_rng(seed, 2)
    pos = rng.permutation(np.flatnonzero(d.y == 1))
    neg = rng.permutation(np.flatnonzero(d.y == -1))
    parts = []
    n_odd = sum(s % 2 for s in sizes)
    odd_seen = 0
    ip = ineg = 0
    for s in sizes:
        n_pos = s // 2
        if s % 2:
            n_pos += 1 if odd_seen < (n_odd + 1) // 2 else 0
            odd_seen += 1
        n_neg = s - n_pos
        if ip + n_pos > len(pos) or ineg + n_neg > len(neg):
            raise ContractError("not enough points of each class for a stratified split")
        idx = np.concatenate([pos[ip:ip + n_pos], neg[ineg:ineg + n_neg]])
        ip += n_pos
        ineg += n_neg
        parts.append(d.subset(rng.permutation(idx)))
    return SplitDataset(*parts)


def save_csv(d: Dataset, path) -> Path:
    """Write ``x1,...,xf,label`` rows and a ``.json`` sidecar with the generator parameters."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{k + 1}" for k in range(d.X.shape[1])] + ["label"])
        for x, lab in zip(d.X, d.y):
            w.writerow([repr(float(v)) for v in x] + [int(lab)])
    path.with_suffix(".json").write_text(json.dumps({"name": d.name, "params": d.params},
                                                    indent=2, default=str))
    return path


def load_csv(path, name: str | None = None) -> Dataset:
    """Read a dataset written by ``save_csv`` or any ``x1,...,label`` CSV.

    A header row is optional. Labels must be +1/-1; a file using 0/1 is
    mapped to -1/+1 with a warning.
    """
    path = Path(path)
    rows, labels = [], []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            if lineno == 1 and row[-1].strip().lower() == "label":
                continue
            if len(row) < 2:
                raise ContractError(f"{path}:{lineno}: expected features and a label")
            try:
                feats = [float(c) for c in row[:-1]]
                lab = float(row[-1])
            except ValueError:
                raise ContractError(f"{path}:{lineno}: non-numeric value in {row}") from None
            if rows and len(feats) != len(rows[0]):
                raise ContractError(f"{path}:{lineno}: expected {len(rows[0])} features")
            if lab not in (-1.0, 0.0, 1.0) or not math.isfinite(lab):
                raise ContractError(f"{path}:{lineno}: label {row[-1]!r} is not in {{+1, -1, 0/1}}")
            rows.append(feats)
            labels.append(lab)
    if not rows:
        raise ContractError(f"{path}: no data rows")
    y = np.array(labels)
    if np.any(y == 0):
        if np.any(y == -1):
            raise ContractError(f"{path}: mixes 0 and -1 labels")
        warnings.warn(f"{path}: mapping 0/1 labels to -1/+1")
        y = 2 * y - 1
    meta = {}
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
    return Dataset(np.array(rows), y.astype(int), name or meta.get("name", "external"),
                   meta.get("params", {}))
