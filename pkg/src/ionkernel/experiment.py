"""Hyperparameter grid search: kernel -> train -> validate per cell, then test once.

For every cell of a two-axis grid the kernel over train + validation + test
is built as one symmetric matrix, noised and shifted (quantum kernels only),
then sliced into the train block and the cross blocks. An SVM is trained on
the train block and scored on the validation block. After the sweep the
best validation cell is picked (ties broken by the middle element of the
lexicographically ordered list of maxima) and only that cell is scored on
the test block.
"""
from __future__ import annotations

import configparser
import dataclasses
import json
import logging
import math
import time
import typing
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import datasets as ds
from . import kernels as kn
from . import svm
from .hamiltonian import IsingParams
from .linalg import PSD_TOL, ContractError
from .rng import derive_seed

log = logging.getLogger(__name__)

AXIS_NAMES = ("gamma", "C", "h", "dt")
KERNELS = ("quantum", "rbf")
SHIFT_SCOPES = ("joint", "train")

DEFAULT_AXES = {
    "quantum": (("h", 0.1, 10.0), ("dt", 1.0, 100.0)),
    "rbf": (("gamma", 1e-3, 10.0), ("C", 1.0, 1e8)),
}


@dataclass(frozen=True)
class Axis:
    name: str
    min: float
    max: float
    points: int = 100
    spacing: str = "log"

    def __post_init__(self):
        if self.name not in AXIS_NAMES:
            raise ContractError(f"unknown grid axis {self.name!r}; expected one of {AXIS_NAMES}")
        if self.points < 1:
            raise ContractError("an axis needs at least one point")
        if self.spacing not in ("log", "linear"):
            raise ContractError(f"spacing must be 'log' or 'linear', got {self.spacing!r}")
        if self.spacing == "log" and not (self.min > 0 and self.max > 0):
            raise ContractError("log spacing needs positive bounds")

    def values(self) -> np.ndarray:
        if self.points == 1:
            return np.array([float(self.min)])
        if self.spacing == "log":
            return np.logspace(math.log10(self.min), math.log10(self.max), self.points)
        return np.linspace(self.min, self.max, self.points)


@dataclass(frozen=True)
class GridSpec:
    axis1: Axis
    axis2: Axis
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.axis1.name == self.axis2.name:
            raise ContractError("the two grid axes must differ")

    @property
    def shape(self) -> tuple[int, int]:
        return self.axis1.points, self.axis2.points

    def cell_params(self, i: int, j: int) -> dict:
        return {**self.fixed, self.axis1.name: float(self.axis1.values()[i]),
                self.axis2.name: float(self.axis2.values()[j])}


@dataclass
class ExperimentConfig:
    """Everything a grid run depends on. Field names double as config-file keys."""

    # model
    task: str = "moons"
    kernel: str = "quantum"
    N: int = 4
    J: float = 1.0
    alpha: float = 1.13
    h: float = 1.0
    dt: float = 1.0
    gamma: float = 1.0
    C: float = 1.0
    redundant: bool = False
    # noise
    p: float = 0.0
    s: float = 0.0
    noise_diagonal: bool = True
    shift_scope: str = "joint"
    noise_seed: int = 0
    # grid; empty axis names pick the kernel's default axes and ranges
    axis1: str = ""
    axis1_min: float = 0.0
    axis1_max: float = 0.0
    axis1_points: int = 100
    axis1_spacing: str = "log"
    axis2: str = ""
    axis2_min: float = 0.0
    axis2_max: float = 0.0
    axis2_points: int = 100
    axis2_spacing: str = "log"
    # data
    n_points: int = 1000
    n_train: int = 333
    n_val: int = 333
    n_test: int = 333
    data_noise: float = -1.0
    factor: float = 0.5
    gap: float = 0.3
    data_path: str = ""
    data_seed: int = 0
    split_seed: int = 0
    # solver
    tol: float = svm.KKT_TOL
    max_iter: int = 0
    # run
    workers: int = 1
    output_dir: str = "results"

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ContractError(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.task not in ds.TASKS + ("external",):
            raise ContractError(f"unknown task {self.task!r}")
        if self.task == "external" and not self.data_path:
            raise ContractError("task 'external' needs data_path")
        if self.shift_scope not in SHIFT_SCOPES:
            raise ContractError(f"shift_scope must be one of {SHIFT_SCOPES}")
        defaults = DEFAULT_AXES[self.kernel]
        for k, (name, lo, hi) in zip((1, 2), defaults):
            if not getattr(self, f"axis{k}"):
                setattr(self, f"axis{k}", name)
                if getattr(self, f"axis{k}_min") == 0 and getattr(self, f"axis{k}_max") == 0:
                    setattr(self, f"axis{k}_min", lo)
                    setattr(self, f"axis{k}_max", hi)
        if self.kernel == "quantum":
            if self.C != 1.0 or "C" in (self.axis1, self.axis2):
                raise ContractError("quantum runs keep C fixed at 1")
            if "gamma" in (self.axis1, self.axis2):
                raise ContractError("gamma is not a quantum kernel hyperparameter")
            kn.NoiseParams(self.p, self.s)
        else:
            if {"h", "dt"} & {self.axis1, self.axis2}:
                raise ContractError("h and dt are not RBF hyperparameters")
            if self.p or self.s:
                raise ContractError("noise channels apply to quantum kernels only")

    def grid(self) -> GridSpec:
        axes = [Axis(getattr(self, f"axis{k}"), getattr(self, f"axis{k}_min"),
                     getattr(self, f"axis{k}_max"), getattr(self, f"axis{k}_points"),
                     getattr(self, f"axis{k}_spacing")) for k in (1, 2)]
        names = ("C", "J", "alpha", "h", "dt") if self.kernel == "quantum" else ("gamma", "C")
        fixed = {n: getattr(self, n) for n in names if n not in (axes[0].name, axes[1].name)}
        return GridSpec(axes[0], axes[1], fixed)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


CONFIG_SECTIONS = {
    "model": ("task", "kernel", "N", "J", "alpha", "h", "dt", "gamma", "C", "redundant"),
    "noise": ("p", "s", "noise_diagonal", "shift_scope", "noise_seed"),
    "grid": tuple(f"axis{k}{suffix}" for k in (1, 2)
                  for suffix in ("", "_min", "_max", "_points", "_spacing")),
    "data": ("n_points", "n_train", "n_val", "n_test", "data_noise", "factor", "gap",
             "data_path", "data_seed", "split_seed"),
    "solver": ("tol", "max_iter"),
    "run": ("workers", "output_dir"),
}

_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _coerce(key: str, text: str):
    if key not in _FIELD_TYPES:
        raise ContractError(f"unknown config key {key!r}")
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if kind in ("bool", bool):
        low = text.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ContractError(f"{key}: expected a boolean, got {text!r}")
    try:
        if kind in ("int", int):
            return int(float(text)) if float(text).is_integer() else int(text)
        if kind in ("float", float):
            return float(text)
    except ValueError:
        raise ContractError(f"{key}: cannot parse {text!r} as {kind}") from None
    return text


def parse_overrides(items) -> dict:
    """``["key=value", ...]`` to a typed dict of config fields."""
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ContractError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        key = key.strip().split(".")[-1]
        out[key] = _coerce(key, value)
    return out


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Read a sectioned ``key = value`` file, then apply ``key=value`` overrides."""
    values = {}
    if path is not None:
        cp = configparser.ConfigParser(interpolation=None)
        cp.optionxform = str
        if not cp.read(path):
            raise ContractError(f"cannot read config file {path}")
        for section in cp.sections():
            for key, text in cp.items(section):
                values[key] = _coerce(key, text)
    if isinstance(overrides, dict):
        values.update(overrides)
    else:
        values.update(parse_overrides(overrides))
    return ExperimentConfig(**values)


def dump_config(cfg: ExperimentConfig, path=None) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    d = cfg.to_dict()
    for section, keys in CONFIG_SECTIONS.items():
        cp[section] = {k: str(d[k]) for k in keys}
    lines = []
    for section in cp.sections():
        lines.append(f"[{section}]")
        lines.extend(f"{k} = {v}" for k, v in cp[section].items())
        lines.append("")
    text = "\n".join(lines)
    if path is not None:
        Path(path).write_text(text)
    return text


def load_task_data(cfg: ExperimentConfig) -> ds.Dataset:
    if cfg.data_path:
        return ds.load_csv(cfg.data_path)
    noise = None if cfg.data_noise < 0 else cfg.data_noise
    return ds.make_task(cfg.task, cfg.n_points, cfg.data_seed, noise, cfg.factor, cfg.gap)


def prepare_split(cfg: ExperimentConfig, dataset: ds.Dataset | None = None) -> ds.SplitDataset:
    """Generate or load the task data, split it and scale it with the train-fitted map."""
    dataset = load_task_data(cfg) if dataset is None else dataset
    parts = ds.split(dataset, (cfg.n_train, cfg.n_val, cfg.n_test), cfg.split_seed)
    return ds.scale_split(parts)


class Problem:
    """Split data plus everything reused across cells of one grid."""

    def __init__(self, cfg: ExperimentConfig, data: ds.SplitDataset):
        self.cfg = cfg
        self.data = data
        self.X = np.vstack([p.X for p in data.parts()])
        self.y = np.concatenate([p.y for p in data.parts()]).astype(float)
        n1, n2, n3 = (len(p) for p in data.parts())
        self.train = np.arange(n1)
        self.val = np.arange(n1, n1 + n2)
        self.test = np.arange(n1 + n2, n1 + n2 + n3)

    def spectral_cache(self, X=None) -> kn.SpectralCache:
        c = self.cfg
        return kn.SpectralCache(self.X if X is None else X, c.N, c.J, c.alpha, c.redundant,
                                max_entries=1)


@dataclass
class CellOutcome:
    val_accuracy: float
    lambda_min: float
    model: svm.SvmModel | None = None
    kernel: kn.KernelMatrix | None = None
    test_accuracy: float = float("nan")


def cell_seed(cfg: ExperimentConfig, i: int, j: int) -> int:
    """Noise seed of cell ``(i, j)``: the stream ``(noise_seed, i, j)`` of the master seed."""
    return derive_seed(cfg.noise_seed, i, j)


def joint_kernel(problem: Problem, params: dict, seed: int,
                 cache: kn.SpectralCache | None = None) -> tuple[kn.KernelMatrix, float]:
    """Kernel over train + validation + test for one cell, after noise and shift.

    Returns the kernel and the smallest eigenvalue of the matrix the shift
    was computed on (NaN for the RBF kernel, which is never shifted).
    """
    cfg = problem.cfg
    if cfg.kernel == "rbf":
        return kn.rbf_gram(params["gamma"], problem.X), float("nan")
    if cache is None:
        cache = problem.spectral_cache()
    states = cache.states(params["h"], params["dt"])
    K = np.minimum(kn.fidelity_from_states(states), 1.0)
    Km = kn.KernelMatrix(K, "noiseless-quantum",
                         dict(N=cfg.N, J=cfg.J, alpha=cfg.alpha, h=params["h"],
                              dt=params["dt"], symmetric=True))
    noisy = cfg.p > 0 or cfg.s > 0
    if cfg.p > 0:
        Km = kn.depolarize(Km, cfg.p, cfg.N)
    if cfg.s > 0:
        Km = kn.add_statistical_noise(Km, cfg.s, seed, diagonal=cfg.noise_diagonal,
                                      symmetric=True)
    if cfg.shift_scope == "joint":
        if noisy:
            Km, lam = kn.shift_regularize(Km)
        else:
            lam = kn.lowest_eigenvalue(Km.values)
    else:
        sub = Km.values[np.ix_(problem.train, problem.train)]
        lam = kn.lowest_eigenvalue(sub)
        if noisy and lam < -PSD_TOL:
            vals = Km.values.copy()
            vals[problem.train, problem.train] -= lam
            Km = Km.replace(vals, "shifted", lambda_min=lam, shifted=True, shift_scope="train")
    return Km, lam


def evaluate_cell(problem: Problem, params: dict, seed: int, with_test: bool = False,
                  cache: kn.SpectralCache | None = None) -> CellOutcome:
    """Train on the train block of one cell and score the validation block."""
    cfg = problem.cfg
    K, lam = joint_kernel(problem, params, seed, cache)
    Kv = K.values
    tr = problem.train
    model = svm.train(Kv[np.ix_(tr, tr)], problem.y[tr], params["C"], tol=cfg.tol,
                      max_iter=cfg.max_iter or None)
    val_pred = svm.predict(model, Kv[np.ix_(problem.val, tr)])
    out = CellOutcome(svm.accuracy(val_pred, problem.y[problem.val]), lam, model, K)
    if with_test:
        test_pred = svm.predict(model, Kv[np.ix_(problem.test, tr)])
        out.test_accuracy = svm.accuracy(test_pred, problem.y[problem.test])
    return out


def select_optimum(acc) -> tuple[int, int]:
    """Pick the middle of the lexicographically ordered maxima; NaN cells are skipped.

    With ``k`` tied cells the one at position ``(k - 1) // 2`` wins, so an
    even number of ties resolves to the earlier of the two middle cells.
    """
    acc = np.asarray(acc, dtype=float)
    if acc.ndim != 2 or acc.size == 0 or np.all(np.isnan(acc)):
        raise ContractError("no valid grid cell to select")
    best = np.nanmax(acc)
    ties = np.argwhere(acc == best)  # row-major, hence lexicographic
    i, j = ties[(len(ties) - 1) // 2]
    return int(i), int(j)


@dataclass
class GridResult:
    config: ExperimentConfig
    axis1_values: np.ndarray
    axis2_values: np.ndarray
    accuracy: np.ndarray
    lambda_min: np.ndarray
    cell_seeds: np.ndarray
    selected: tuple[int, int]
    val_accuracy: float
    test_accuracy: float
    errors: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def optimum(self) -> dict:
        i, j = self.selected
        return {self.config.axis1: float(self.axis1_values[i]),
                self.config.axis2: float(self.axis2_values[j])}

    def summary(self) -> dict:
        cfg = self.config
        shifts = self.lambda_min[np.isfinite(self.lambda_min)]
        return {
            "task": cfg.task,
            "kernel": cfg.kernel,
            "N": cfg.N if cfg.kernel == "quantum" else None,
            "noise": {"p": cfg.p, "s": cfg.s, "noise_diagonal": cfg.noise_diagonal,
                      "shift_scope": cfg.shift_scope},
            "grid": {cfg.axis1: self.axis1_values.tolist(), cfg.axis2: self.axis2_values.tolist()},
            "optimum": self.optimum,
            "selected_cell": list(self.selected),
            "A_val": self.val_accuracy,
            "A_test": self.test_accuracy,
            "seeds": {"data_seed": cfg.data_seed, "split_seed": cfg.split_seed,
                      "noise_seed": cfg.noise_seed},
            "invalid_cells": {f"{i},{j}": msg for (i, j), msg in self.errors.items()},
            "shifted_cells": int(np.sum(shifts < -PSD_TOL)) if cfg.p or cfg.s else 0,
            "min_lambda": float(shifts.min()) if shifts.size else None,
            "runtime_s": self.runtime,
            "config": cfg.to_dict(),
        }


def _cell_groups(cfg: ExperimentConfig, grid: GridSpec):
    """Cells grouped so each group shares one Hamiltonian diagonalization."""
    n1, n2 = grid.shape
    if cfg.kernel == "quantum" and grid.axis2.name == "h":
        return [[(i, j) for i in range(n1)] for j in range(n2)]
    return [[(i, j) for j in range(n2)] for i in range(n1)]


def run_grid(cfg: ExperimentConfig, data: ds.SplitDataset | None = None,
             workers: int | None = None, progress=None) -> GridResult:
    """Sweep the two-axis grid, select the optimum and score it on the test part.

    Args:
        cfg: Experiment configuration.
        data: Pre-split, pre-scaled data; generated from ``cfg`` when omitted.
        workers: Thread count; defaults to ``cfg.workers``.
        progress: Optional callable invoked with the number of finished cells.

    Raises:
        ContractError: when every cell failed to train.
    """
    t0 = time.perf_counter()
    grid = cfg.grid()
    problem = Problem(cfg, prepare_split(cfg) if data is None else data)
    n1, n2 = grid.shape
    acc = np.full((n1, n2), np.nan)
    lam = np.full((n1, n2), np.nan)
    seeds = np.array([[cell_seed(cfg, i, j) for j in range(n2)] for i in range(n1)], dtype=np.int64)
    errors = {}

    def run_group(cells):
        cache = problem.spectral_cache() if cfg.kernel == "quantum" else None
        out = []
        for i, j in cells:
            try:
                res = evaluate_cell(problem, grid.cell_params(i, j), int(seeds[i, j]), cache=cache)
                out.append((i, j, res.val_accuracy, res.lambda_min, None))
            except svm.ConvergenceError as exc:
                out.append((i, j, np.nan, np.nan, str(exc)))
        return out

    groups = _cell_groups(cfg, grid)
    n_workers = max(1, workers or cfg.workers)
    done = 0
    with ThreadPoolExecutor(max_workers=n_workers) as pool:
        for chunk in pool.map(run_group, groups):
            for i, j, a, l, err in chunk:
                acc[i, j] = a
                lam[i, j] = l
                if err:
                    errors[(i, j)] = err
            done += len(chunk)
            if progress is not None:
                progress(done)
    if np.all(np.isnan(acc)):
        raise ContractError("every grid cell failed to train")
    sel = select_optimum(acc)
    best = evaluate_cell(problem, grid.cell_params(*sel), int(seeds[sel]), with_test=True)
    if errors:
        log.warning("%d of %d cells did not converge", len(errors), n1 * n2)
    return GridResult(cfg, grid.axis1.values(), grid.axis2.values(), acc, lam, seeds, sel,
                      best.val_accuracy, best.test_accuracy, errors,
                      time.perf_counter() - t0)


def mesh_kernel(problem: Problem, params: dict, seed: int, mesh: np.ndarray) -> np.ndarray:
    """Cross kernel (mesh x train) under the same kernel and noise model as the cell."""
    cfg = problem.cfg
    Xtr = problem.X[problem.train]
    if cfg.kernel == "rbf":
        return kn.rbf_gram(params["gamma"], mesh, Xtr).values
    p = IsingParams(cfg.N, params["h"], params["dt"], cfg.J, cfg.alpha)
    Km = kn.KernelMatrix(np.minimum(kn.fidelity_from_states(
        kn.feature_states(p, mesh, cfg.redundant), kn.feature_states(p, Xtr, cfg.redundant)), 1.0),
        "noiseless-quantum")
    if cfg.p > 0:
        Km = kn.depolarize(Km, cfg.p, cfg.N)
    if cfg.s > 0:
        Km = kn.add_statistical_noise(Km, cfg.s, derive_seed(seed, 1), symmetric=False)
    return Km.values


def decision_mesh(result: GridResult, data: ds.SplitDataset | None = None,
                  points: int = 100) -> tuple[np.ndarray, np.ndarray, svm.SvmModel, Problem]:
    """Decision scores at the selected cell over a ``points x points`` mesh of ``[-1, 1]**2``."""
    cfg = result.config
    problem = Problem(cfg, prepare_split(cfg) if data is None else data)
    params = cfg.grid().cell_params(*result.selected)
    seed = int(result.cell_seeds[result.selected])
    cell = evaluate_cell(problem, params, seed)
    ticks = np.linspace(-1.0, 1.0, points)
    g1, g2 = np.meshgrid(ticks, ticks, indexing="ij")
    mesh = np.column_stack([g1.ravel(), g2.ravel()])
    if problem.X.shape[1] != 2:
        raise ContractError("decision mesh is only defined for two input features")
    scores = svm.decision(cell.model, mesh_kernel(problem, params, seed, mesh))
    return mesh, scores, cell.model, problem


def _write_rows(path: Path, header: str, rows) -> None:
    with path.open("w") as fh:
        fh.write(header + "\n")
        for r in rows:
            fh.write(",".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)
                              for v in r) + "\n")


def emit_outputs(result: GridResult, out_dir=None, data: ds.SplitDataset | None = None,
                 mesh_points: int = 100, stem: str | None = None) -> dict:
    """Write the results JSON, the heatmap CSV and the decision-function mesh CSV.

    Returns a dict mapping ``results``, ``heatmap`` and ``decision`` to paths.
    ``mesh_points=0`` skips the decision mesh.
    """
    cfg = result.config
    out = Path(out_dir or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if stem is None:
        stem = f"{cfg.task}_{cfg.kernel}" + (f"_N{cfg.N}_p{cfg.p:g}_s{cfg.s:g}"
                                             if cfg.kernel == "quantum" else "")
    paths = {"results": out / f"{stem}_results.json",
             "heatmap": out / f"{stem}_heatmap.csv",
             "decision": out / f"{stem}_decision.csv"}
    paths["results"].write_text(json.dumps(result.summary(), indent=2))
    rows = ((a1, a2, result.accuracy[i, j])
            for i, a1 in enumerate(result.axis1_values)
            for j, a2 in enumerate(result.axis2_values))
    _write_rows(paths["heatmap"], f"{cfg.axis1},{cfg.axis2},accuracy", rows)
    if mesh_points > 0:
        mesh, scores, _, _ = decision_mesh(result, data, mesh_points)
        labels = svm.sign_labels(scores)
        _write_rows(paths["decision"], "x1,x2,score,label",
                    ((x[0], x[1], sc, int(lb)) for x, sc, lb in zip(mesh, scores, labels)))
    else:
        del paths["decision"]
    return paths


def load_summary(path) -> dict:
    return json.loads(Path(path).read_text())


def config_help() -> str:
    """One line per config key with its default, grouped by section."""
    defaults = ExperimentConfig().to_dict()
    lines = []
    for section, keys in CONFIG_SECTIONS.items():
        lines.append(f"[{section}]")
        for k in keys:
            lines.append(f"  {k} = {defaults[k]!s}    ({typing.cast(str, _FIELD_TYPES[k])})")
    return "\n".join(lines)
