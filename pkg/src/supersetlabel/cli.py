"""Command-line entry point.

Commands: fit, predict, cv, sweep, synth, friedman. Every flag can also be
given in a flat key=value config file (--config); explicit flags win. The
effective configuration is echoed into the output directory so runs are
auditable. Exit codes: 0 success, 2 usage, 3 bad input data, 4 solver
failure, 1 unexpected error.
"""

from __future__ import annotations

import sys

import argparse
import dataclasses
from pathlib import Path

import numpy as np

from .dataset import (
    DataFormatError,
    Dataset,
    load_dataset,
    load_manifest,
    make_synthetic,
    normalize_unit_length,
    save_dataset,
)
from .evaluation import cross_validate, friedman_test, sweep
from .graph import build_knn_graph
from .inference import Predictor, predict_batch
from .labelspace import encode
from .solver import SolverConfig, SolverDivergenceError, alm_fit, write_trace_csv

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_SOLVER = 4

_SOLVER_FIELDS = {f.name for f in dataclasses.fields(SolverConfig)}
_BOOL_KEYS = {"deterministic", "normalize"}


def _parse_value(key: str, raw: str):
    if key in _BOOL_KEYS:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if key in ("K", "t_max", "loop_max", "gd_max_iters", "seed"):
        return int(raw)
    if key == "theta":
        return raw if raw == "auto" else float(raw)
    if key in _SOLVER_FIELDS:
        return float(raw)
    return raw


def read_kv_file(path) -> dict[str, str]:
    kv = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataFormatError(f"{path}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        kv[k.strip()] = v.strip()
    return kv


def _add_solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--theta", default=None,
                   help="kernel width, or 'auto' for the mean kNN distance")
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--sigma0", type=float, default=None)
    p.add_argument("--sigma-cap", dest="sigma_cap", type=float, default=None)
    p.add_argument("--t-max", dest="t_max", type=int, default=None)
    p.add_argument("--eps0", type=float, default=None)
    p.add_argument("--loop-max", dest="loop_max", type=int, default=None)
    p.add_argument("--eps1", type=float, default=None)
    p.add_argument("--gd-max-iters", dest="gd_max_iters", type=int, default=None)
    p.add_argument("--gd-grad-tol", dest="gd_grad_tol", type=float, default=None)
    p.add_argument("--tau0", type=float, default=None)
    p.add_argument("--armijo-c", dest="armijo_c", type=float, default=None)
    p.add_argument("--backtrack-factor", dest="backtrack_factor", type=float,
                   default=None)


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None,
                   help="flat key=value file; explicit flags override it")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--deterministic", action="store_const", const=True,
                   default=None, help="serial reductions, bit-reproducible")
    p.add_argument("--normalize", action="store_const", const=True,
                   default=None, help="scale feature rows to unit length")


def _add_data_flags(p: argparse.ArgumentParser, truth_required=False) -> None:
    p.add_argument("--features", default=None)
    p.add_argument("--candidates", default=None)
    p.add_argument("--truth", default=None,
                   help="ground-truth labels" +
                        (" (required)" if truth_required else ""))
    p.add_argument("--manifest", default=None,
                   help="dataset manifest; replaces the three file flags")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="supersetlabel",
        description="Disambiguate superset-labeled data on a kNN graph and "
                    "classify by weighted nearest-neighbor voting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_fit = sub.add_parser("fit", help="disambiguate a training set")
    _add_data_flags(p_fit)
    p_fit.add_argument("--out", required=True)
    _add_solver_flags(p_fit)
    _add_common_flags(p_fit)

    p_pred = sub.add_parser("predict", help="label new examples from a fit")
    p_pred.add_argument("--model", required=True, help="output dir of a fit run")
    p_pred.add_argument("--features", required=True)
    p_pred.add_argument("--out", required=True, help="prediction CSV path")

    p_cv = sub.add_parser("cv", help="five-fold cross validation")
    _add_data_flags(p_cv, truth_required=True)
    p_cv.add_argument("--out", required=True)
    _add_solver_flags(p_cv)
    _add_common_flags(p_cv)

    p_sweep = sub.add_parser("sweep", help="cross-validate over a parameter grid")
    _add_data_flags(p_sweep, truth_required=True)
    p_sweep.add_argument("--grid", required=True,
                         help="key=value file with comma lists for alpha, beta, K")
    p_sweep.add_argument("--out", required=True)
    _add_solver_flags(p_sweep)
    _add_common_flags(p_sweep)

    p_synth = sub.add_parser("synth", help="generate a synthetic dataset")
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--c", type=int, required=True)
    p_synth.add_argument("--d", type=int, required=True)
    p_synth.add_argument("--sep", type=float, default=4.0)
    p_synth.add_argument("--p", type=float, default=0.7,
                         help="probability an example gets extra labels")
    p_synth.add_argument("--r", type=int, default=1,
                         help="number of extra labels when corrupted")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--out", required=True)

    p_fr = sub.add_parser("friedman", help="rank test over an accuracy table")
    p_fr.add_argument("--table", required=True,
                      help="CSV, one method per row: name,acc_1,...,acc_N")
    p_fr.add_argument("--confidence", type=float, default=0.90)
    p_fr.add_argument("--out", default=None, help="optional result CSV")

    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config file, and explicit flags (flags win)."""
    merged: dict = {f.name: f.default for f in dataclasses.fields(SolverConfig)}
    merged.update({"seed": 0, "deterministic": False, "normalize": False,
                   "features": None, "candidates": None, "truth": None,
                   "manifest": None})
    if getattr(args, "config", None):
        for k, v in read_kv_file(args.config).items():
            if k not in merged:
                raise DataFormatError(f"unknown config key {k!r}")
            merged[k] = _parse_value(k, v)
    for k in list(merged):
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = _parse_value(k, v) if isinstance(v, str) else v
    return merged


def solver_config(merged: dict) -> SolverConfig:
    return SolverConfig(**{k: merged[k] for k in _SOLVER_FIELDS})


def _echo_config(merged: dict, cmd: str, out_dir: Path) -> None:
    with (out_dir / "effective_config.txt").open("w") as f:
        f.write(f"command={cmd}\n")
        for k in sorted(merged):
            v = merged[k]
            if v is None:
                continue
            f.write(f"{k}={str(v).lower() if isinstance(v, bool) else v}\n")


def _load_from_args(args, merged) -> Dataset:
    if merged.get("manifest"):
        ds = load_manifest(merged["manifest"])
    else:
        if not merged.get("features") or not merged.get("candidates"):
            raise DataFormatError(
                "need --manifest or both --features and --candidates"
            )
        ds = load_dataset(merged["features"], merged["candidates"],
                          truth_path=merged.get("truth"))
    if merged.get("normalize"):
        ds = normalize_unit_length(ds)
    return ds


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def cmd_fit(args) -> int:
    merged = resolve_config(args)
    ds = _load_from_args(args, merged)
    cfg = solver_config(merged)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(merged, "fit", out)

    graph = build_knn_graph(ds, cfg.K, cfg.theta)
    report = alm_fit(graph, encode(ds), cfg)

    with (out / "labels.csv").open("w") as f:
        f.write("index,label\n")
        for i, y in enumerate(report.labels, start=1):
            f.write(f"{i},{y}\n")
    np.savetxt(out / "onehot.csv", report.onehot, fmt="%d", delimiter=",")
    np.savetxt(out / "fstar.csv", report.F_star, fmt="%.12g", delimiter=",")
    write_trace_csv(report, out / "trace.csv")
    with (out / "model_meta.txt").open("w") as f:
        f.write(f"n={ds.n}\nd={ds.d}\nc={ds.c}\nK={cfg.K}\n"
                f"theta={_fmt(graph.theta)}\n")
    with (out / "model_features.tsv").open("w") as f:
        for row in ds.features:
            f.write("\t".join(f"{v:.17g}" for v in row) + "\n")
    print(f"fit: {ds.n} examples, converged={report.converged} "
          f"in {report.loops_used} loops, "
          f"rowsum_resid={report.rowsum_resid:.3g}, "
          f"min_entry={report.min_entry:.3g}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model_dir = Path(args.model)
    meta = read_kv_file(model_dir / "model_meta.txt")
    onehot = np.loadtxt(model_dir / "onehot.csv", delimiter=",", ndmin=2)
    train_features = np.loadtxt(model_dir / "model_features.tsv", ndmin=2)
    predictor = Predictor(
        train_features=train_features,
        onehot=onehot,
        K=int(meta["K"]),
        theta=float(meta["theta"]),
    )
    X = np.loadtxt(args.features, ndmin=2)
    if X.shape[1] != train_features.shape[1]:
        raise DataFormatError(
            f"test features have {X.shape[1]} dims, model expects "
            f"{train_features.shape[1]}"
        )
    labels, scores = predict_batch(predictor, X)
    c = scores.shape[1]
    with open(args.out, "w") as f:
        f.write("index,predicted_label,"
                + ",".join(f"score_{j}" for j in range(1, c + 1)) + "\n")
        for i in range(len(labels)):
            f.write(f"{i + 1},{labels[i]},"
                    + ",".join(_fmt(s) for s in scores[i]) + "\n")
    print(f"predict: wrote {len(labels)} predictions to {args.out}")
    return EXIT_OK


def cmd_cv(args) -> int:
    merged = resolve_config(args)
    ds = _load_from_args(args, merged)
    if ds.truth is None:
        raise DataFormatError("cv requires ground-truth labels (--truth)")
    cfg = solver_config(merged)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(merged, "cv", out)
    result = cross_validate(ds, cfg, merged["seed"])
    with (out / "results.csv").open("w") as f:
        f.write("fold,train_acc,test_acc\n")
        for fold, (tr, te) in enumerate(
            zip(result.fold_train_acc, result.fold_test_acc), start=1
        ):
            f.write(f"{fold},{_fmt(tr)},{_fmt(te)}\n")
    print(f"cv: train {result.mean_train:.3f} +/- {result.std_train:.3f}, "
          f"test {result.mean_test:.3f} +/- {result.std_test:.3f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    merged = resolve_config(args)
    ds = _load_from_args(args, merged)
    cfg = solver_config(merged)
    grid = read_kv_file(args.grid)
    alphas = [float(v) for v in grid.get("alpha", str(cfg.alpha)).split(",")]
    betas = [float(v) for v in grid.get("beta", str(cfg.beta)).split(",")]
    Ks = [int(v) for v in grid.get("K", str(cfg.K)).split(",")]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _echo_config(merged, "sweep", out)
    rows = sweep(ds, alphas, betas, Ks, cfg, merged["seed"])
    with (out / "sweep.csv").open("w") as f:
        f.write("alpha,beta,K,mean_train,std_train,mean_test,std_test\n")
        for r in rows:
            f.write(f"{_fmt(r.alpha)},{_fmt(r.beta)},{r.K},"
                    f"{_fmt(r.mean_train)},{_fmt(r.std_train)},"
                    f"{_fmt(r.mean_test)},{_fmt(r.std_test)}\n")
    print(f"sweep: {len(rows)} grid points written to {out / 'sweep.csv'}")
    return EXIT_OK


def cmd_synth(args) -> int:
    ds = make_synthetic(n=args.n, c=args.c, d=args.d, sep=args.sep,
                        p_coocc=args.p, r_extra=args.r, seed=args.seed)
    paths = save_dataset(ds, args.out)
    print(f"synth: wrote {ds.n} examples to {paths['manifest'].parent}")
    return EXIT_OK


def _parse_accuracy_table(path) -> tuple[list[str], list[list[float]]]:
    """Rows are methods: either all numbers or a leading name column."""
    names, rows = [], []
    for line_no, line in enumerate(Path(path).read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            rows.append([float(p) for p in parts])
            names.append(f"method_{len(rows)}")
            continue
        except ValueError:
            pass
        try:
            vals = [float(p) for p in parts[1:]]
        except ValueError:
            if line_no == 1:
                continue  # header row
            raise DataFormatError(
                f"{path}: non-numeric accuracy on line {line_no}"
            ) from None
        names.append(parts[0])
        rows.append(vals)
    if not rows:
        raise DataFormatError(f"{path}: no accuracy rows")
    if len({len(r) for r in rows}) != 1:
        raise DataFormatError(f"{path}: ragged accuracy rows")
    return names, rows


def cmd_friedman(args) -> int:
    names, rows = _parse_accuracy_table(args.table)
    result = friedman_test(np.asarray(rows), confidence=args.confidence)
    print(f"friedman: statistic={_fmt(result.statistic)} "
          f"critical={_fmt(result.critical_value)} reject={result.reject}")
    for name, rank, rej in zip(names, result.mean_ranks,
                               result.reject_per_method):
        print(f"  {name}: mean_rank={_fmt(rank)} "
              f"differs_from_best={rej}")
    if args.out:
        with open(args.out, "w") as f:
            f.write("method,mean_rank,differs_from_best\n")
            for name, rank, rej in zip(names, result.mean_ranks,
                                       result.reject_per_method):
                f.write(f"{name},{_fmt(rank)},{str(rej).lower()}\n")
    return EXIT_OK


_COMMANDS = {
    "fit": cmd_fit,
    "predict": cmd_predict,
    "cv": cmd_cv,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
    "friedman": cmd_friedman,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (DataFormatError, FileNotFoundError, ValueError) as e:
        print(f"error: code=DATA msg={e}", file=sys.stderr)
        return EXIT_DATA
    except SolverDivergenceError as e:
        print(f"error: code=SOLVER msg={e}", file=sys.stderr)
        return EXIT_SOLVER
    except Exception as e:  # pragma: no cover
        print(f"error: code=UNEXPECTED msg={e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
