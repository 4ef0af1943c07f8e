"""Command-line interface: ``fairclass <verb> [options]``.

Verbs: simulate, rank, fit, eval, sweep-m, bound.  Every run writes one
``<verb>.manifest`` (key=value) into ``--out-dir``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import platform
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, kernels, theory
from .classifiers import (
    ByCount,
    ByThreshold,
    EmptyModelWarning,
    fit_fair,
    fit_independence,
    fit_truncated_nc,
    load_model,
    predict,
    save_model,
    fit_shrunken_centroids,
    tune_shrunken_centroids,
)
from .data import SplitSpec, load_matrix, standardize_samples, stratified_split
from .errors import ConvergenceError, DataError
from .selection import default_search_cap, m0_objective, m1_objective, select_m0, select_m1
from .sim import SimConfig, aggregate, config_dict, run_simulation
from .stats import class_summaries, lambda_max_curve, rank_by_abs, t_statistics

log = logging.getLogger("fairclass")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_tsv(path: Path, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt(v) for v in row) + "\n")


class Manifest:
    def __init__(self, verb, args):
        self.verb = verb
        self.started = time.time()
        self.params = {k: v for k, v in sorted(vars(args).items()) if k not in ("func",)}
        self.inputs = {}
        self.outputs = []
        self.extra = {}

    def input(self, path):
        if path:
            self.inputs[str(path)] = _digest(path)

    def write(self, out_dir: Path):
        path = out_dir / f"{self.verb}.manifest"
        lines = [
            f"verb={self.verb}",
            f"version={__version__}",
            f"backend={kernels.BACKEND}",
            f"numpy={np.__version__}",
            f"python={platform.python_version()}",
        ]
        lines += [f"param.{k}={_fmt(v)}" for k, v in self.params.items()]
        lines += [f"input.{k}=sha256:{v}" for k, v in self.inputs.items()]
        lines += [f"{k}={_fmt(v)}" for k, v in self.extra.items()]
        lines += [f"output={o}" for o in self.outputs]
        lines.append(f"wall_clock_seconds={time.time() - self.started:.3f}")
        path.write_text("\n".join(lines) + "\n")
        return path


def _load(path, args, standardize=None):
    ds = load_matrix(path, orientation=args.orientation, label=args.label)
    if args.standardize if standardize is None else standardize:
        ds = standardize_samples(ds)
    return ds


def _add_data_options(p):
    p.add_argument("--orientation", choices=("rows", "columns"), default="rows",
                   help="samples in rows (label column) or in columns (label row)")
    p.add_argument("--label", default="label", help="name of the label column/row")
    p.add_argument("--standardize", action="store_true",
                   help="standardize every sample to mean 0, variance 1 first")


# ---------------------------------------------------------------- simulate

def cmd_simulate(args, man: Manifest, out: Path) -> int:
    cfg = SimConfig(
        p=args.p, c=args.c, d=args.d, n1=args.n1, n2=args.n2,
        n_test_per_class=args.n_test, replications=args.reps, seed=args.seed,
        search_cap=args.search_cap, nsc_grid=args.nsc_grid,
    )
    log.info("simulating %d replications at p=%d (backend %s)", cfg.replications, cfg.p, kernels.BACKEND)
    mu1, _, results = run_simulation(cfg, threads=args.threads)
    summ = aggregate(results)
    R = summ.replications
    curves = out / "curves.tsv"
    _write_tsv(curves, ("m", "mean_error_t", "se_t", "mean_error_oracle", "se_oracle"), (
        (m + 1, float(summ.mean_t[m]), None if summ.se_t is None else float(summ.se_t[m]),
         float(summ.mean_oracle[m]), None if summ.se_oracle is None else float(summ.se_oracle[m]))
        for m in range(cfg.p)
    ))
    reps = out / "replications.tsv"
    _write_tsv(reps, ("rep", "fair_m", "fair_error", "nsc_features", "nsc_error", "projection_error"), (
        (r.rep, r.fair_m, r.fair_error, r.nsc_features, r.nsc_error, r.projection_error) for r in results
    ))
    man.outputs += [curves.name, reps.name]
    for k, v in config_dict(cfg).items():
        man.extra[f"config.{k}"] = v
    man.extra["config.M"] = cfg.M
    man.extra["seed.streams"] = "mean=(seed,0) loadings=(seed,1) replication r=(seed,2,r)"
    man.extra["signal_features"] = int(np.count_nonzero(mu1))
    man.extra["signal_sum_sq"] = float(mu1 @ mu1)
    for k, v in summ.stats.items():
        man.extra[f"summary.{k}"] = v
    print(f"replications={R}")
    for k, v in summ.stats.items():
        print(f"{k}={_fmt(v)}")
    return EXIT_OK


# ---------------------------------------------------------------- rank

def cmd_rank(args, man: Manifest, out: Path) -> int:
    man.input(args.data)
    ds = _load(args.data, args)
    T = t_statistics(*class_summaries(ds)).values
    r = rank_by_abs(T)
    names = ds.feature_names or tuple(f"f{j + 1}" for j in range(ds.p))
    path = Path(args.output) if args.output else out / "rank.tsv"
    _write_tsv(path, ("rank", "feature_index", "feature_name", "t_value", "abs_t"), (
        (i + 1, int(j) + 1, names[j], float(T[j]), float(abs(T[j]))) for i, j in enumerate(r.order)
    ))
    man.outputs.append(str(path))
    return EXIT_OK


# ---------------------------------------------------------------- fit / eval

def _parse_select(text: str):
    kind, _, val = text.partition(":")
    if kind in ("m1", "m0") and not val:
        return kind, None
    if kind == "count" and val:
        return kind, int(val)
    if kind == "threshold" and val:
        return kind, float(val)
    raise UsageError(f"bad --select {text!r}: use m1, m0, count:K or threshold:B")


def _fit(ds, method: str, select: str, delta, search_cap=None):
    """Fit one model; returns (model, info dict)."""
    info = {}
    if method == "independence":
        return fit_independence(ds), info
    if method == "nsc":
        if delta is None:
            model = tune_shrunken_centroids(ds)
            info["delta"] = model.threshold
            return model, info
        return fit_shrunken_centroids(ds, delta), info
    kind, val = _parse_select(select)
    s1, s2 = class_summaries(ds)
    T = t_statistics(s1, s2)
    ranking = rank_by_abs(T.values)
    if kind == "m1":
        M = search_cap or default_search_cap(ds.p, ds.n)
        M = min(M, ds.p)
        lam = lambda_max_curve(ds, ranking, M)
        m = select_m1(T.values[ranking.order], lam, s1.n, s2.n).m_hat
        info.update(selection="m1", search_cap=M, m_hat=m)
    elif kind == "m0":
        alpha = (s1.means - s2.means)[ranking.order]
        m = select_m0(alpha, s1.n, s2.n).m_hat
        info.update(selection="m0", m_hat=m)
    elif kind == "count":
        m = val
    else:
        if method == "truncated-nc":
            raise UsageError("truncated-nc takes a feature count, not a threshold")
        return fit_fair(ds, ByThreshold(val)), info
    if method == "fair":
        return fit_fair(ds, ByCount(m)), info
    if method == "truncated-nc":
        return fit_truncated_nc(ds, ranking, m), info
    raise UsageError(f"unknown method {method!r}")


def _predictions(model, ds):
    scores = model.decision_function(ds.features)
    pred = np.where(scores > 0.0, 1, 2)
    return scores, pred


def _write_predictions(path, model, ds):
    scores, pred = _predictions(model, ds)
    ids = ds.sample_ids or tuple(f"s{i + 1}" for i in range(ds.n))
    names = ds.class_names
    _write_tsv(path, ("sample_id", "score", "predicted", "actual"), (
        (ids[i], float(scores[i]), names[pred[i] - 1], names[ds.labels[i] - 1]) for i in range(ds.n)
    ))
    return int(np.count_nonzero(pred != ds.labels))


def _check_same_features(a, b):
    if a.p != b.p:
        raise DataError(f"feature count mismatch: training has {a.p}, test has {b.p}")


def cmd_fit(args, man: Manifest, out: Path) -> int:
    if args.gamma_sweep:
        return _gamma_sweep(args, man, out)
    if not args.train:
        raise UsageError("fit needs --train (or --data with --gamma-sweep)")
    man.input(args.train)
    train = _load(args.train, args)
    test = None
    if args.test:
        man.input(args.test)
        test = _load(args.test, args)
        _check_same_features(train, test)
    model, info = _fit(train, args.method, args.select, args.delta, args.search_cap)
    for k, v in info.items():
        man.extra[f"fit.{k}"] = v
    model_path = out / "model.tsv"
    save_model(model, model_path)
    man.outputs.append(model_path.name)
    train_err = int(np.count_nonzero(predict(model, train.features) != train.labels))
    line = f"method={args.method}\ttrain_error={train_err}/{train.n}"
    if test is not None:
        pred_path = out / "predictions.tsv"
        test_err = _write_predictions(pred_path, model, test)
        man.outputs.append(pred_path.name)
        line += f"\ttest_error={test_err}/{test.n}"
    line += f"\tfeatures={model.active.size}"
    if model.is_empty:
        line += "\twarning=empty_model"
    man.extra["metrics"] = line.replace("\t", " ")
    print(line)
    return EXIT_OK


def cmd_eval(args, man: Manifest, out: Path) -> int:
    man.input(args.model)
    man.input(args.test)
    model = load_model(args.model)
    test = _load(args.test, args)
    if test.p != model.p:
        raise DataError(f"feature count mismatch: model has {model.p}, test has {test.p}")
    pred_path = out / "predictions.tsv"
    err = _write_predictions(pred_path, model, test)
    man.outputs.append(pred_path.name)
    line = f"method={model.kind}\ttest_error={err}/{test.n}\tfeatures={model.active.size}"
    man.extra["metrics"] = line.replace("\t", " ")
    print(line)
    return EXIT_OK


def _gamma_sweep(args, man: Manifest, out: Path) -> int:
    path = args.data or args.train
    if not path:
        raise UsageError("--gamma-sweep needs --data")
    man.input(path)
    ds = _load(path, args)
    gammas = [float(g) for g in args.gamma_sweep.split(",")]
    jobs = [(g, s) for g in gammas for s in range(args.splits)]

    def run(job):
        g, s = job
        train, test = stratified_split(ds, SplitSpec(g, seed=args.seed + s))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", EmptyModelWarning)
            fair, _ = _fit(train, "fair", args.select, None, args.search_cap)
            nsc, _ = _fit(train, "nsc", args.select, args.delta)
            ir = fit_independence(train)
        errs = [float(np.mean(predict(m, test.features) != test.labels)) for m in (fair, nsc, ir)]
        return (g, s, args.seed + s, errs[0], errs[1], errs[0] - errs[1], errs[2],
                int(fair.active.size), int(nsc.active.size))

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(j) for j in jobs]
    sweep = out / "gamma_sweep.tsv"
    _write_tsv(sweep, ("gamma", "split", "seed", "fair_error", "nsc_error", "diff_fair_minus_nsc",
                       "ir_error", "fair_features", "nsc_features"), rows)
    man.outputs.append(sweep.name)
    for g in gammas:
        sel = [r for r in rows if r[0] == g]
        print(f"gamma={g}\tsplits={len(sel)}\tfair_error_mean={np.mean([r[3] for r in sel]):.4f}"
              f"\tnsc_error_mean={np.mean([r[4] for r in sel]):.4f}"
              f"\tir_error_mean={np.mean([r[6] for r in sel]):.4f}"
              f"\tfair_features_mean={np.mean([r[7] for r in sel]):.2f}")
    return EXIT_OK


# ---------------------------------------------------------------- sweep-m

def cmd_sweep_m(args, man: Manifest, out: Path) -> int:
    man.input(args.data)
    ds = _load(args.data, args)
    s1, s2 = class_summaries(ds)
    T = t_statistics(s1, s2)
    ranking = rank_by_abs(T.values)
    M = min(args.max_m or default_search_cap(ds.p, ds.n), ds.p)
    lam = lambda_max_curve(ds, ranking, M)
    t_ranked = T.values[ranking.order][:M]
    alpha = (s1.means - s2.means)[ranking.order][:M]
    obj1 = m1_objective(t_ranked, lam, s1.n, s2.n)
    obj0 = m0_objective(alpha, s1.n, s2.n)
    cum = kernels.compensated_cumsum(t_ranked * t_ranked)
    path = out / "sweep_m.tsv"
    _write_tsv(path, ("m", "objective_m0", "objective_m1", "lambda_max", "cumulative_T2"), (
        (m + 1, float(obj0[m]), float(obj1[m]), float(lam.values[m]), float(cum[m])) for m in range(M)
    ))
    man.outputs.append(path.name)
    m0 = int(np.argmax(obj0)) + 1
    m1 = int(np.argmax(obj1)) + 1
    man.extra.update(search_cap=M, m0_hat=m0, m1_hat=m1)
    print(f"search_cap={M}\tm0_hat={m0}\tm1_hat={m1}")
    return EXIT_OK


# ---------------------------------------------------------------- bound

_BOUND_KEYS = {"signal": float, "m": int, "p": int, "n1": int, "n2": int,
               "b0": float, "b": float, "Cp": float, "C_p": float, "C0": float}


def cmd_bound(args, man: Manifest, out: Path) -> int:
    params = {}
    for item in args.params:
        key, sep, val = item.partition("=")
        if not sep or key not in _BOUND_KEYS:
            raise UsageError(f"bad parameter {item!r}; expected key=value with key in {sorted(_BOUND_KEYS)}")
        params[key] = val
    for key in ("signal", "m", "p", "n1", "n2", "b0", "b", "Cp", "C0"):
        v = getattr(args, key.lower() if key != "Cp" else "cp", None)
        if v is not None:
            params[key] = v
    try:
        typed = {("C_p" if k in ("Cp", "C_p") else k): _BOUND_KEYS[k](v) for k, v in params.items()}
        value, tag = theory.evaluate(args.formula, theory.TheoryInputs(**typed))
    except ValueError as e:
        raise UsageError(str(e)) from None
    man.extra.update(formula=args.formula, value=value)
    print(f"{args.formula}\t{value!r}\t[{tag}; asymptotic leading-order]")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fairclass", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=1, help="master RNG seed")
    common.add_argument("--threads", type=int, default=1, help="worker threads (output is thread-count independent)")
    common.add_argument("--out-dir", default=".", help="directory for output files and the run manifest")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("simulate", parents=[common], help="factor-model Monte Carlo experiment")
    p.add_argument("--p", type=int, default=4500)
    p.add_argument("--c", type=float, default=0.02)
    p.add_argument("--d", type=int, default=6)
    p.add_argument("--n1", type=int, default=30)
    p.add_argument("--n2", type=int, default=30)
    p.add_argument("--n-test", type=int, default=200, help="test samples per class")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--search-cap", type=int, default=None)
    p.add_argument("--nsc-grid", type=int, default=30)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("rank", parents=[common], help="rank features by |t|")
    p.add_argument("--data", required=True)
    p.add_argument("--output", default=None, help="TSV path (default OUT_DIR/rank.tsv)")
    _add_data_options(p)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("fit", parents=[common], help="fit a classifier (optionally evaluate on --test)")
    p.add_argument("--train")
    p.add_argument("--test")
    p.add_argument("--data", help="full dataset for --gamma-sweep")
    p.add_argument("--method", choices=("fair", "independence", "truncated-nc", "nsc"), default="fair")
    p.add_argument("--select", default="m1", help="m1 | m0 | count:K | threshold:B")
    p.add_argument("--delta", type=float, default=None, help="nsc shrinkage (default: tuned on training error)")
    p.add_argument("--search-cap", type=int, default=None)
    p.add_argument("--gamma-sweep", default=None, help="comma-separated training fractions, e.g. 0.4,0.5,0.6")
    p.add_argument("--splits", type=int, default=100)
    _add_data_options(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("eval", parents=[common], help="apply a saved model to test data")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    _add_data_options(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-m", parents=[common], help="feature-count criteria over m")
    p.add_argument("--data", required=True)
    p.add_argument("--max-m", type=int, default=None)
    _add_data_options(p)
    p.set_defaults(func=cmd_sweep_m)

    p = sub.add_parser("bound", parents=[common], help="evaluate a closed-form error formula")
    p.add_argument("--formula", required=True, choices=sorted(theory.FORMULAS))
    for key, typ in (("signal", float), ("m", int), ("p", int), ("n1", int), ("n2", int),
                     ("b0", float), ("b", float), ("Cp", float), ("C0", float)):
        p.add_argument(f"--{key}", dest=key.lower(), type=typ, default=None)
    p.add_argument("params", nargs="*", help="key=value parameters")
    p.set_defaults(func=cmd_bound)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    man = Manifest(args.verb, args)
    try:
        code = args.func(args, man, out)
    except UsageError as e:
        ap.print_usage(sys.stderr)
        print(f"fairclass {args.verb}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as e:
        print(f"fairclass {args.verb}: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except (ConvergenceError, FloatingPointError) as e:
        print(f"fairclass {args.verb}: numeric failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    man.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
