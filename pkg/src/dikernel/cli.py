"""Command-line experiment runner.

Subcommands: ``synth``, ``train``, ``eval``, ``gradcheck``, ``sweep``.
Settings come from defaults, then an optional YAML/JSON config file
(flat keys named like :class:`ExperimentConfig` fields), then flags.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .artifacts import load_map, save_map, save_model, write_artifact
from .baselines import train_ce, train_ls
from .data import (Dataset, load_csv, load_libsvm, make_blobs, minmax_scale, one_hot, save_csv, save_libsvm,
                   train_test_split)
from .exceptions import (ConfigError, DegenerateMapError, DIKernelError, GradientUndefinedError, NumericalError,
                         RankDeficiencyError)
from .feature_maps import features, init_fourier, init_nystrom
from .gradcheck import OBJECTIVES, check, relative_error
from .kernels import KernelConfig
from .objectives import DIConfig
from .predictors import accuracy, classify, krr_fit, krr_predict, mse
from .training import TrainConfig, train_fourier, train_nystrom

log = logging.getLogger("dikernel")

OUTPUT_ENV = "DIKERNEL_OUTPUT_DIR"
GRADCHECK_TOL = 1e-4
NUMERICAL = (NumericalError, RankDeficiencyError, DegenerateMapError, GradientUndefinedError,
             np.linalg.LinAlgError, FloatingPointError)


@dataclass
class ExperimentConfig:
    # dataset
    data_format: str = "synthetic"  # synthetic | libsvm | csv
    train_path: str | None = None
    test_path: str | None = None
    label_column: int = -1
    header: bool = False
    encoding: str = "one_hot"
    n_samples: int = 2000
    n_test: int = 500
    n_features: int = 2
    n_classes: int = 2
    clusters_per_class: int = 1
    separation: float = 3.0
    noise: float = 1.0
    scale: bool = True
    # model
    map: str = "nystrom"  # nystrom | fourier
    dim: int = 32
    gamma: float = 1.0
    rho: float = 1e-4
    objective: str = "di"  # di | ls | ce
    # schedule
    batch_size: int = 1000
    lr0: float = 1e-3
    lr_decay: float = 0.1
    saturation_rel_tol: float = 1e-3
    max_epochs: int = 100
    max_decays: int = 1
    seed: int = 0
    out_dir: str | None = None

    def validate(self):
        if self.data_format not in ("synthetic", "libsvm", "csv"):
            raise ConfigError(f"unknown data_format {self.data_format!r}")
        if self.data_format != "synthetic":
            if not self.train_path:
                raise ConfigError("train_path is required for file datasets")
            for p in (self.train_path, self.test_path):
                if p and not Path(p).is_file():
                    raise ConfigError(f"dataset file not found: {p}")
        if self.map not in ("nystrom", "fourier"):
            raise ConfigError(f"unknown map kind {self.map!r}")
        if self.objective not in ("di", "ls", "ce"):
            raise ConfigError(f"unknown objective {self.objective!r}")
        if self.dim < 1 or self.n_samples < 1:
            raise ConfigError("dim and n_samples must be positive")
        return self

    def train_config(self) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, lr0=self.lr0, lr_decay=self.lr_decay,
                           saturation_rel_tol=self.saturation_rel_tol, max_epochs=self.max_epochs,
                           max_decays=self.max_decays, seed=self.seed)

    def kernel(self) -> KernelConfig:
        return KernelConfig("gaussian", self.gamma)


FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_bool(s):
    return str(s).lower() in ("1", "true", "yes", "on")


def load_config_file(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = yaml.safe_load(p.read_text()) or {}
    if "config" in raw and isinstance(raw["config"], dict):
        raw = raw["config"]  # a run manifest
    unknown = set(raw) - set(FIELD_TYPES)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    return raw


def resolve_config(args) -> ExperimentConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    for name in FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    cfg = ExperimentConfig(**values)
    if cfg.out_dir is None:
        cfg.out_dir = os.environ.get(OUTPUT_ENV, "runs")
    return cfg.validate()


def load_datasets(cfg: ExperimentConfig):
    """Return ``(train, test)``; ``test`` may be ``None`` when no held-out data is configured."""
    if cfg.data_format == "synthetic":
        data = make_blobs(cfg.n_samples + cfg.n_test, cfg.n_features, cfg.n_classes, cfg.clusters_per_class,
                          cfg.separation, cfg.noise, cfg.seed, cfg.encoding)
        train, test = train_test_split(data, cfg.n_test, cfg.seed) if cfg.n_test > 0 else (data, None)
    else:
        if cfg.data_format == "libsvm":
            read = lambda p, n=None: load_libsvm(p, n_features=n, encoding=cfg.encoding)
        else:
            read = lambda p, n=None: load_csv(p, cfg.label_column, cfg.header, encoding=cfg.encoding)
        train = read(cfg.train_path)
        test = read(cfg.test_path, train.d) if cfg.test_path else None
        if test is not None:
            test = _align_labels(train, test)
    if cfg.scale:
        train, others = minmax_scale(train, [test] if test is not None else [])
        test = others[0] if others else None
    return train, test


def _align_labels(train: Dataset, test: Dataset) -> Dataset:
    """Re-express test class ids in the training set's label order."""
    if test.labels is None:
        return test
    index = {name: i for i, name in enumerate(train.label_names)}
    try:
        ids = [index[test.label_names[i]] for i in test.labels]
    except KeyError as e:
        raise ConfigError(f"test label {e.args[0]!r} does not occur in the training data") from None
    mode = "unit_norm" if test.targets.encoding == "one_hot_unit_norm" else "raw"
    return replace(test, labels=np.array(ids), class_count=train.class_count, label_names=train.label_names,
                   targets=one_hot(ids, train.class_count, mode))


def new_run_dir(base, name: str) -> Path:
    base = Path(base)
    base.mkdir(parents=True, exist_ok=True)
    i = 0
    while True:
        p = base / f"{name}-{i:03d}"
        try:
            p.mkdir()
            return p
        except FileExistsError:
            i += 1


def write_manifest(run_dir: Path, command: str, cfg: ExperimentConfig, **extra):
    manifest = {"command": command, "version": __version__, "config": asdict(cfg), **extra}
    (run_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def train_run(cfg: ExperimentConfig, run_dir: Path):
    train, _ = load_datasets(cfg)
    kcfg = cfg.kernel()
    tcfg = cfg.train_config()
    dicfg = DIConfig(cfg.rho)
    fmap = init_nystrom(train, cfg.dim, cfg.seed) if cfg.map == "nystrom" else \
        init_fourier(kcfg, train.d, cfg.dim, cfg.seed)
    head = None
    if cfg.objective == "di":
        if cfg.map == "nystrom":
            fmap, report = train_nystrom(train, fmap, tcfg, dicfg, kcfg)
        else:
            fmap, report = train_fourier(train, fmap, tcfg, dicfg)
    elif cfg.objective == "ls":
        fmap, head, report = train_ls(train, fmap, tcfg, dicfg, kcfg)
    else:
        fmap, head, report = train_ce(train, fmap, tcfg, kcfg)
    save_map(run_dir / "map.bin", fmap, kcfg, objective=cfg.objective, seed=cfg.seed)
    if head is not None:
        write_artifact(run_dir / "head.bin", {"kind": "linear_head", "objective": cfg.objective},
                       {"W": head.W, "b": head.b})
    report.write(run_dir / "report.csv")
    summary = {"objective": cfg.objective, "initial_mu": report.initial_mu, "final_mu": report.final_mu,
               "epochs": report.epochs, "stop_reason": report.stop_reason, "wall_time": report.wall_time,
               "lr_changes": report.lr_changes}
    (run_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return fmap, report


def evaluate(cfg: ExperimentConfig, fmap, kcfg: KernelConfig, run_dir: Path | None = None) -> dict:
    train, test = load_datasets(cfg)
    if fmap.d != train.d:
        raise ConfigError(f"map expects {fmap.d} features but the dataset has {train.d}")
    dicfg = DIConfig(cfg.rho)
    F_tr = features(train.X, fmap, kcfg)
    model = krr_fit(F_tr, train.Y, dicfg)
    rows = []
    for split, ds in (("train", train), ("test", test)):
        if ds is None:
            continue
        scores = krr_predict(model, F_tr if split == "train" else features(ds.X, fmap, kcfg))
        acc = accuracy(classify(scores), ds.labels) if ds.labels is not None else float("nan")
        rows.append({"split": split, "mse": mse(scores, ds.Y), "accuracy": acc})
    if run_dir is not None:
        save_model(run_dir / "krr.bin", model)
        with (run_dir / "metrics.csv").open("w", newline="") as fh:
            w = csv.DictWriter(fh, ["split", "mse", "accuracy"])
            w.writeheader()
            w.writerows(rows)
    return {f"{r['split']}_{k}": r[k] for r in rows for k in ("mse", "accuracy")}


def _print_table(rows, cols):
    print("  ".join(f"{c:>12}" for c in cols))
    for r in rows:
        print("  ".join(f"{r[c]:>12.6g}" if isinstance(r[c], float) else f"{r[c]!s:>12}" for c in cols))


def cmd_synth(args) -> int:
    data = make_blobs(args.n_samples + args.n_test, args.n_features, args.n_classes, args.clusters_per_class,
                      args.separation, args.noise, args.seed)
    save = save_csv if args.format == "csv" else save_libsvm
    if args.n_test:
        train, test = train_test_split(data, args.n_test, args.seed)
        save(test, args.test_out or f"{args.out}.test")
    else:
        train = data
    save(train, args.out)
    print(f"wrote {train.N} training samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    run_dir = new_run_dir(cfg.out_dir, "train")
    write_manifest(run_dir, "train", cfg)
    _, report = train_run(cfg, run_dir)
    print(f"{run_dir}: objective {cfg.objective}, mu {report.initial_mu:.6g} -> {report.final_mu:.6g} "
          f"in {report.epochs} epochs ({report.stop_reason}, {report.wall_time:.2f}s)")
    return 0


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    if not Path(args.map_artifact).is_file():
        raise ConfigError(f"map artifact not found: {args.map_artifact}")
    fmap, kcfg, _ = load_map(args.map_artifact)
    run_dir = new_run_dir(cfg.out_dir, "eval")
    write_manifest(run_dir, "eval", cfg, map_artifact=str(args.map_artifact))
    metrics = evaluate(cfg, fmap, kcfg, run_dir)
    rows = [{"split": s, "mse": metrics[f"{s}_mse"], "accuracy": metrics[f"{s}_accuracy"]}
            for s in ("train", "test") if f"{s}_mse" in metrics]
    _print_table(rows, ["split", "mse", "accuracy"])
    return 0


def cmd_gradcheck(args) -> int:
    worst = 0.0
    for obj in args.objective:
        analytic, numeric = check(obj, seed=args.seed, rho=args.rho, gamma=args.gamma,
                                  corrupt=args.corrupt_gradient)
        err = relative_error(analytic, numeric)
        worst = max(worst, err)
        print(f"{obj:>12}  max relative deviation {err:.3e}  {'ok' if err < GRADCHECK_TOL else 'FAIL'}")
    return 0 if worst < GRADCHECK_TOL else 2


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    dims = sorted({int(x) for x in args.dims.split(",") if x.strip()})
    if not dims:
        raise ConfigError("dimension list is empty")
    sweep_dir = new_run_dir(cfg.out_dir, "sweep")
    write_manifest(sweep_dir, "sweep", cfg, dims=dims)
    cols = ["J", "objective", "final_mu", "train_mse", "test_mse", "train_accuracy", "test_accuracy"]
    rows = []
    with (sweep_dir / "sweep.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, cols, extrasaction="ignore")
        w.writeheader()
        fh.flush()
        for J in dims:
            sub = ExperimentConfig(**{**asdict(cfg), "dim": J})
            run_dir = sweep_dir / f"J{J}"
            run_dir.mkdir()
            write_manifest(run_dir, "sweep-run", sub)
            fmap, report = train_run(sub, run_dir)
            metrics = evaluate(sub, fmap, sub.kernel(), run_dir)
            row = {"J": J, "objective": cfg.objective, "final_mu": report.final_mu, **metrics}
            rows.append(row)
            w.writerow(row)
            fh.flush()
    _print_table([{c: r.get(c, float("nan")) for c in cols} for r in rows], cols)
    return 0


def _add_experiment_flags(p):
    p.add_argument("--config", help="YAML or JSON file with ExperimentConfig keys")
    p.add_argument("--data-format", dest="data_format", choices=["synthetic", "libsvm", "csv"])
    p.add_argument("--train", dest="train_path")
    p.add_argument("--test", dest="test_path")
    p.add_argument("--label-column", dest="label_column", type=int)
    p.add_argument("--header", dest="header", type=_parse_bool)
    p.add_argument("--encoding", choices=["one_hot", "one_hot_unit_norm"])
    p.add_argument("--n-samples", dest="n_samples", type=int)
    p.add_argument("--n-test", dest="n_test", type=int)
    p.add_argument("--n-features", dest="n_features", type=int)
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--clusters-per-class", dest="clusters_per_class", type=int)
    p.add_argument("--separation", type=float)
    p.add_argument("--noise", type=float)
    p.add_argument("--scale", type=_parse_bool)
    p.add_argument("--map", choices=["nystrom", "fourier"])
    p.add_argument("--dim", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--objective", choices=["di", "ls", "ce"])
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", dest="lr0", type=float)
    p.add_argument("--lr-decay", dest="lr_decay", type=float)
    p.add_argument("--saturation-tol", dest="saturation_rel_tol", type=float)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--max-decays", dest="max_decays", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", dest="out_dir", help=f"output directory (default ${OUTPUT_ENV} or ./runs)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dikernel", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic blob dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--test-out")
    p.add_argument("--format", choices=["libsvm", "csv"], default="libsvm")
    p.add_argument("--n-samples", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=0)
    p.add_argument("--n-features", type=int, default=2)
    p.add_argument("--n-classes", type=int, default=2)
    p.add_argument("--clusters-per-class", type=int, default=1)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train a feature map")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="fit KRR on a trained map and report metrics")
    _add_experiment_flags(p)
    p.add_argument("--map-artifact", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="compare analytic and finite-difference gradients")
    p.add_argument("--objective", nargs="+", choices=OBJECTIVES, default=["nys_di", "rf_di"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rho", type=float, default=1e-2)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--corrupt-gradient", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("sweep", help="train and evaluate over several feature dimensionalities")
    _add_experiment_flags(p)
    p.add_argument("--dims", required=True, help="comma-separated dimensionalities, e.g. 8,16,32")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except NUMERICAL as e:
        print(f"dikernel: numerical failure: {e}", file=sys.stderr)
        return 2
    except (DIKernelError, OSError) as e:
        print(f"dikernel: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
