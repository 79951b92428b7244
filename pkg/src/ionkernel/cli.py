"""Command-line entry point: ``ionkernel <subcommand> [options] [key=value ...]``.

Every subcommand reads an optional sectioned config file (``--config``) and
applies ``key=value`` overrides on top, using the ``ExperimentConfig`` field
names. Output goes to ``--output-dir``, else ``$IONKERNEL_OUTPUT_DIR``, else
the config's ``output_dir``. Failures print one ``error: {json}`` line on
stderr and exit with status 2 (usage) or 1 (runtime).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import benchmarks as bm
from . import datasets as ds
from . import experiment as ex
from . import kernels as kn
from . import svm
from .hamiltonian import IsingParams
from .linalg import ContractError

ENV_OUTPUT_DIR = "IONKERNEL_OUTPUT_DIR"

log = logging.getLogger("ionkernel")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="sectioned key = value config file")
    p.add_argument("--output-dir", type=Path, help=f"output directory (default ${ENV_OUTPUT_DIR} "
                                                   "or the config's output_dir)")
    p.add_argument("overrides", nargs="*", metavar="key=value", help="config overrides")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ionkernel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="errors only")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a benchmark dataset as CSV")
    g.add_argument("--task", choices=ds.TASKS)
    g.add_argument("--n", type=int, help="number of points (even)")
    g.add_argument("--noise", type=float, help="Gaussian noise level (circles, moons)")
    g.add_argument("--seed", type=int, help="data seed")
    g.add_argument("--split", action="store_true", help="also write scaled train/val/test CSVs")
    _common(g)

    k = sub.add_parser("kernel", help="write the Gram matrix of an input CSV")
    k.add_argument("--input", type=Path, required=True, help="dataset CSV (x1,...,label)")
    k.add_argument("--scale", action="store_true", help="scale the features to [-1, 1] first")
    _common(k)

    t = sub.add_parser("train", help="fit an SVM on a dataset CSV and save the model")
    t.add_argument("--input", type=Path, required=True, help="training dataset CSV")
    t.add_argument("--scale", action="store_true", help="scale the features to [-1, 1] first")
    _common(t)

    gr = sub.add_parser("grid", help="grid search, then write results, heatmap and decision mesh")
    gr.add_argument("--workers", type=int, help="threads for the grid cells")
    gr.add_argument("--mesh-points", type=int, default=100, help="decision mesh points per axis")
    _common(gr)

    r = sub.add_parser("reproduce", help="rerun a reference battery and write a comparison report")
    r.add_argument("table", choices=sorted(bm.TABLES))
    r.add_argument("--reduced", action="store_true", help="reduced grid (default 20 x 20)")
    r.add_argument("--points", type=int, default=20, help="points per axis of the reduced grid")
    r.add_argument("--workers", type=int, help="threads for the grid cells")
    _common(r)

    i = sub.add_parser("info", help="print every config key with its default")
    _common(i)
    return parser


def _config(args) -> ex.ExperimentConfig:
    return ex.load_config(args.config, args.overrides)


def _output_dir(args, cfg: ex.ExperimentConfig) -> Path:
    if args.output_dir is not None:
        out = args.output_dir
    elif os.environ.get(ENV_OUTPUT_DIR):
        out = Path(os.environ[ENV_OUTPUT_DIR])
    else:
        out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_input(args) -> ds.Dataset:
    if not args.input.exists():
        raise UsageError(f"input file {args.input} does not exist")
    d = ds.load_csv(args.input)
    return ds.scale_features(d) if args.scale else d


def _gram(cfg: ex.ExperimentConfig, X) -> kn.KernelMatrix:
    if cfg.kernel == "rbf":
        return kn.rbf_gram(cfg.gamma, X)
    K = kn.quantum_gram(IsingParams(cfg.N, cfg.h, cfg.dt, cfg.J, cfg.alpha), X, redundant=cfg.redundant)
    if cfg.p > 0:
        K = kn.depolarize(K, cfg.p, cfg.N)
    if cfg.s > 0:
        K = kn.add_statistical_noise(K, cfg.s, cfg.noise_seed, diagonal=cfg.noise_diagonal)
    if cfg.p > 0 or cfg.s > 0:
        K, _ = kn.shift_regularize(K)
    return K


def cmd_generate(args) -> dict:
    over = {}
    for flag, key in (("task", "task"), ("n", "n_points"), ("noise", "data_noise"), ("seed", "data_seed")):
        if getattr(args, flag) is not None:
            over[key] = getattr(args, flag)
    cfg = ex.load_config(args.config, {**ex.parse_overrides(args.overrides), **over})
    out = _output_dir(args, cfg)
    d = ex.load_task_data(cfg)
    stem = f"{cfg.task}_n{cfg.n_points}_seed{cfg.data_seed}"
    files = [ds.save_csv(d, out / f"{stem}.csv")]
    if args.split:
        parts = ex.prepare_split(cfg, d)
        for name, part in zip(("train", "val", "test"), parts.parts()):
            files.append(ds.save_csv(part, out / f"{stem}_{name}.csv"))
    return {"files": [str(f) for f in files]}


def cmd_kernel(args) -> dict:
    cfg = _config(args)
    d = _load_input(args)
    K = _gram(cfg, d.X)
    path = kn.save_kernel(K, _output_dir(args, cfg) / f"{args.input.stem}_gram.csv")
    return {"files": [str(path)], "kind": K.kind, "shape": list(K.shape)}


def cmd_train(args) -> dict:
    cfg = _config(args)
    d = _load_input(args)
    K = _gram(cfg, d.X)
    model = svm.train(K.values, d.y, C=cfg.C, tol=cfg.tol, max_iter=cfg.max_iter or None)
    model = svm.SvmModel(model.dual_coefs, model.labels, model.bias, model.C,
                         model.support_indices, model.iterations, model.violation,
                         {"input": str(args.input), "scaled": args.scale, "kernel": K.kind,
                          **{k: v for k, v in K.meta.items() if not isinstance(v, np.ndarray)}})
    acc = svm.accuracy(svm.predict(model, K.values), d.y)
    path = model.save(_output_dir(args, cfg) / f"{args.input.stem}_model.json")
    return {"files": [str(path)], "train_accuracy": acc, "support_vectors": len(model.support_indices)}


def cmd_grid(args) -> dict:
    cfg = _config(args)
    out = _output_dir(args, cfg)
    data = ex.prepare_split(cfg)
    res = ex.run_grid(cfg, data, workers=args.workers)
    paths = ex.emit_outputs(res, out, data, args.mesh_points)
    return {"files": [str(p) for p in paths.values()], "optimum": res.optimum,
            "A_val": res.val_accuracy, "A_test": res.test_accuracy}


def cmd_reproduce(args) -> dict:
    cfg = _config(args)
    out = _output_dir(args, cfg)
    scale = "reduced" if args.reduced else "full"
    report = bm.reproduce_table(args.table, scale, args.points, out_dir=out,
                                workers=args.workers or cfg.workers, base=cfg)
    stem = f"table{args.table}_{scale}"
    return {"files": [str(out / f"{stem}_report.json"), str(out / f"{stem}_report.md")],
            "passed": report["passed"]}


def cmd_info(args) -> dict:
    cfg = _config(args)
    print(ex.config_help())
    print(f"\nenvironment: {ENV_OUTPUT_DIR} sets the default output directory")
    return {"config": cfg.to_dict()}


COMMANDS = {"generate": cmd_generate, "kernel": cmd_kernel, "train": cmd_train,
            "grid": cmd_grid, "reproduce": cmd_reproduce, "info": cmd_info}


def _error(kind: str, message: str) -> None:
    print("error: " + json.dumps({"error": kind, "message": message}), file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _error("usage", str(exc))
        return 2
    level = logging.ERROR if args.quiet else (logging.DEBUG if args.verbose > 1 else
                                              logging.INFO if args.verbose else logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        info = COMMANDS[args.command](args)
    except (UsageError, ContractError, FileNotFoundError, ValueError) as exc:
        _error("usage", str(exc))
        return 2
    except (svm.ConvergenceError, OSError) as exc:
        _error("runtime", str(exc))
        return 1
    if args.command != "info":
        print(json.dumps(info, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
