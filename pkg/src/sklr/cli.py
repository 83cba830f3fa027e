"""Command line interface: ``sklr <subcommand> [options]``.

Exit codes: 0 success (a solver stopped by ``--max-iter`` still exits 0 with
a warning), 1 bad input, 2 internal solver contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time

import numpy as np

from . import tuning
from .data import apply_scaling, fit_scaling, load_csv, load_features, train_test_split
from .dual import Hyperparams
from .errors import DataError, SklrError, SolverContractError
from .kernel import KernelSpec
from .model import (accuracy, decision_value, load_model, predict_proba, save_model,
                    sigmoid, train_model)
from .solver import FIRST_ORDER, SECOND_ORDER, smo_train
from .synthetic import synthetic_suite

log = logging.getLogger("sklr")

EXIT_OK, EXIT_INPUT, EXIT_CONTRACT = 0, 1, 2
WSS_NAMES = {"first": FIRST_ORDER, "second": SECOND_ORDER}
RULE_NAMES = {"best-accuracy": tuning.BEST_ACCURACY, "sparsest-of-3": tuning.SPARSEST_OF_TOP3}


class _InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        # usage problems are input errors, not contract violations
        self.print_usage(sys.stderr)
        raise _InputError(f"{self.prog}: {message}")


def _default_threads() -> int:
    raw = os.environ.get("SKLR_THREADS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# argument groups


def _common(p):
    g = p.add_argument_group("global")
    g.add_argument("--seed", type=int, default=0, help="seed for every random choice")
    g.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker processes for grid cells (default: $SKLR_THREADS or 1)")
    g.add_argument("--quiet", action="store_true", help="only print errors on stderr")
    g.add_argument("--json", action="store_true", help="machine-readable output on stdout")


def _data_args(p, required=True):
    p.add_argument("--data", required=required, help="CSV file with a header row")
    p.add_argument("--label", default="-1", help="label column name or index (default: last)")


def _kernel_args(p):
    p.add_argument("--kernel", choices=["gaussian", "linear", "polynomial"], default="gaussian")
    p.add_argument("--sigma", type=float, default=1.0)
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--coef", type=float, default=1.0)


def _solver_args(p):
    p.add_argument("--gamma", type=float, default=1e-5, help="distance of the box from 0 and C")
    p.add_argument("--tol", type=float, default=1e-5, help="KKT stopping tolerance")
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--wss", choices=sorted(WSS_NAMES), default="second")
    p.add_argument("--threshold", type=float, default=1e-5, help="selection threshold on alpha")
    p.add_argument("--no-scale", action="store_true", help="skip min-max feature scaling")


def _lambda_args(p, fixed_help="fixed lambda"):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--lambda", dest="lam", type=float, default=None, help=fixed_help)
    g.add_argument("--lambda-choice", action="store_true", help="use lambda = C/10")


def _kernel_of(a) -> KernelSpec:
    if a.kernel == "gaussian":
        return KernelSpec.gaussian(a.sigma)
    if a.kernel == "linear":
        return KernelSpec.linear()
    return KernelSpec.polynomial(a.degree, a.coef)


def _hyper(a, C=1.0, lam=0.0) -> Hyperparams:
    return Hyperparams(C=C, lam=lam, gamma=a.gamma, kkt_tol=a.tol, max_iter=a.max_iter,
                       selection_threshold=a.threshold)


def _label(a):
    return a.label


def _c_values(text):
    if text is None:
        return None
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise DataError(f"--c-values must be a comma-separated list of numbers, got {text!r}")
    if not vals or any(v <= 0 for v in vals):
        raise DataError("--c-values must list positive numbers")
    return vals


def _emit(a, doc: dict, lines: list[str]):
    if a.json:
        print(json.dumps(doc, indent=1))
    else:
        for line in lines:
            print(line)


def _write_rows(path, header, rows):
    """Write CSV to ``path`` or stdout when ``path`` is ``None`` or ``-``."""
    if path in (None, "-"):
        fh = sys.stdout
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
        return None
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return str(path)


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# subcommands


def cmd_train(a) -> int:
    d = load_csv(a.data, _label(a))
    lam = tuning.lambda_choice(a.C) if a.lambda_choice else (a.lam or 0.0)
    h = _hyper(a, a.C, lam)
    t0 = time.monotonic()
    model, state, report = train_model(d, _kernel_of(a), h, wss=WSS_NAMES[a.wss], scale=not a.no_scale)
    seconds = time.monotonic() - t0
    save_model(model, a.out)
    warning = None
    if report.termination != "converged":
        warning = f"stopped at max_iter={h.max_iter} with KKT gap {report.kkt_residual_final:.3g}"
    doc = {
        "command": "train",
        "model": str(a.out),
        "iterations": report.iterations,
        "kkt_residual": report.kkt_residual_final,
        "objective": report.objective_final,
        "termination": report.termination,
        "warning": warning,
        "C": h.C,
        "lambda": h.lam,
        "wss": a.wss,
        "n_train": d.n,
        "n_support": model.n_support,
        "selection_ratio": model.selection_ratio,
        "train_accuracy": accuracy(model, d),
        "timing": {"seconds": seconds},
    }
    lines = [
        f"model written to {a.out}",
        f"iterations        {report.iterations} ({report.termination})",
        f"kkt residual      {report.kkt_residual_final:.3e}",
        f"objective         {report.objective_final:.10g}",
        f"selected points   {model.n_support}/{d.n} (ratio {model.selection_ratio:.4f})",
        f"train accuracy    {doc['train_accuracy']:.4f}",
        f"seconds           {seconds:.3f}",
    ]
    if warning:
        lines.append(f"warning: {warning}")
    _emit(a, doc, lines)
    return EXIT_OK


def cmd_predict(a) -> int:
    model = load_model(a.model)
    x = load_features(a.data, None if a.label is None else a.label)
    if x.shape[1] != model.p:
        raise DataError(f"input has {x.shape[1]} feature columns, the model expects {model.p}")
    if a.json and a.out in (None, "-"):
        raise DataError("--json needs --out for the prediction CSV")
    if x.shape[0]:
        dec = np.atleast_1d(decision_value(model, x))
    else:
        dec = np.empty(0)
    prob = np.atleast_1d(sigmoid(dec)) if dec.size else dec
    lab = np.where(dec >= 0.0, 1, -1)
    rows = [[_fmt(v), _fmt(p), int(l)] for v, p, l in zip(dec, prob, lab)]
    out = _write_rows(a.out, ["decision", "prob_pos", "label"], rows)
    if a.json:
        print(json.dumps({"command": "predict", "n": len(rows), "n_pos": int(np.sum(lab > 0)), "out": out}))
    elif out is not None and not a.quiet:
        print(f"{len(rows)} predictions written to {out}", file=sys.stderr)
    return EXIT_OK


def cmd_eval(a) -> int:
    model = load_model(a.model)
    d = load_csv(a.data, _label(a))
    if d.p != model.p:
        raise DataError(f"input has {d.p} feature columns, the model expects {model.p}")
    acc = accuracy(model, d)
    p_pos = np.atleast_1d(predict_proba(model, d.features))
    p_true = np.where(d.labels > 0, p_pos, 1.0 - p_pos)
    loss = float(np.mean(-np.log(np.clip(p_true, 1e-300, None))))
    doc = {
        "command": "eval",
        "n": d.n,
        "accuracy": acc,
        "mean_log_loss": loss,
        "n_support": model.n_support,
        "selection_ratio": model.selection_ratio,
    }
    _emit(a, doc, [
        f"accuracy          {acc:.4f} on {d.n} points",
        f"mean log loss     {loss:.6f}",
        f"selected points   {model.n_support}/{model.n_train} (ratio {model.selection_ratio:.4f})",
    ])
    return EXIT_OK


def _lambda_mode(a):
    if a.lambda_choice:
        return "choice"
    if a.lam is not None:
        return a.lam
    return "grid"


def cmd_cv(a) -> int:
    d = load_csv(a.data, _label(a))
    t0 = time.monotonic()
    res = tuning.kfold_grid_search(
        d, a.k, _kernel_of(a), _hyper(a), lambda_mode=_lambda_mode(a), seed=a.seed,
        c_values=_c_values(a.c_values), n_lambda=a.n_lambda, rule=RULE_NAMES[a.selection_rule],
        val_fraction=a.val_fraction, threads=a.threads, wss=WSS_NAMES[a.wss], scale=not a.no_scale,
    )
    seconds = time.monotonic() - t0
    out = None
    if a.out:
        res.write_csv(a.out)
        out = str(a.out)
    s = res.summary()
    doc = {
        "command": "cv",
        "k": s["k"],
        "rule": s["rule"],
        "lambda_mode": s["lambda_mode"],
        "mean_accuracy": s["mean_accuracy"],
        "std_accuracy": s["std_accuracy"],
        "mean_selection_ratio": s["mean_selection_ratio"],
        "std_selection_ratio": s["std_selection_ratio"],
        "fold_accuracies": res.accuracies.tolist(),
        "fold_selection_ratios": res.ratios.tolist(),
        "chosen": s["chosen"],
        "out": out,
        "timing": {"seconds": seconds},
    }
    lines = [f"fold {f.fold}: C={f.chosen.C:g} lambda={f.chosen.lam:g} "
             f"accuracy={f.test_accuracy:.4f} ratio={f.selection_ratio:.4f}" for f in res.folds]
    lines += [
        f"accuracy          {res.mean_accuracy:.4f} ({res.std_accuracy:.4f})",
        f"selection ratio   {res.mean_ratio:.4f} ({res.std_ratio:.4f})",
        f"rule              {res.rule}, lambda {res.lambda_mode}",
    ]
    if out:
        lines.append(f"results written to {out}")
    _emit(a, doc, lines)
    return EXIT_OK


def cmd_grid(a) -> int:
    d = load_csv(a.data, _label(a))
    train, hold = train_test_split(d, a.test_fraction, a.seed)
    t0 = time.monotonic()
    mode = _lambda_mode(a)
    cells = tuning.grid_search(
        train, hold, _kernel_of(a), _hyper(a), lambda_mode=mode, c_values=_c_values(a.c_values),
        n_lambda=a.n_lambda, wss=WSS_NAMES[a.wss], threads=a.threads, scale=not a.no_scale,
    )
    seconds = time.monotonic() - t0
    rule = RULE_NAMES[a.selection_rule]
    best = tuning.select(cells, rule)
    rows = [[0, c.C, c.lam, c.val_accuracy, "", c.selection_ratio, c.iterations, f"{c.seconds:.6f}"]
            for c in cells]
    out = _write_rows(a.out, tuning.CSV_HEADER, rows) if a.out else None
    doc = {
        "command": "grid",
        "rule": rule,
        "lambda_mode": tuning._mode_name(mode),
        "n_cells": len(cells),
        "best": {"C": best.C, "lambda": best.lam, "val_acc": best.val_accuracy,
                 "selection_ratio": best.selection_ratio, "iterations": best.iterations},
        "out": out,
        "timing": {"seconds": seconds},
    }
    lines = [f"C={c.C:<8g} lambda={c.lam:<10.4g} acc={c.val_accuracy:.4f} ratio={c.selection_ratio:.4f}"
             for c in cells]
    lines.append(f"best ({rule}): C={best.C:g} lambda={best.lam:g} "
                 f"acc={best.val_accuracy:.4f} ratio={best.selection_ratio:.4f}")
    _emit(a, doc, lines)
    return EXIT_OK


def cmd_sweep(a) -> int:
    d = load_csv(a.data, _label(a))
    if a.test_fraction > 0:
        train, test = train_test_split(d, a.test_fraction, a.seed)
    else:
        train, test = d, d
    t0 = time.monotonic()
    rows = tuning.lambda_sweep(train, test, _kernel_of(a), _hyper(a, a.C),
                               tuning.lambda_grid(a.C, a.n_lambda), wss=WSS_NAMES[a.wss],
                               scale=not a.no_scale)
    seconds = time.monotonic() - t0
    header = ["lambda", "accuracy", "selection_ratio", "omega_norm", "iterations"]
    table = [[_fmt(r["lambda"]), _fmt(r["accuracy"]), _fmt(r["selection_ratio"]),
              _fmt(r["omega_norm"]), r["iterations"]] for r in rows]
    if a.json:
        out = _write_rows(a.out, header, table) if a.out else None
        print(json.dumps({"command": "sweep", "C": a.C, "rows": rows, "out": out,
                          "timing": {"seconds": seconds}}, indent=1))
    else:
        _write_rows(a.out, header, table)
    return EXIT_OK


def cmd_bound(a) -> int:
    d = load_csv(a.data, _label(a))
    if not a.no_scale:
        d = apply_scaling(d, fit_scaling(d))
    k = _kernel_of(a)
    h = _hyper(a, a.C, 0.0)
    state, report = smo_train(d, k, h, wss=WSS_NAMES[a.wss])
    bound = tuning.lambda_upper_bound(d, k, a.C, a.gamma, state.alpha)
    minority = 0 if d.n_pos == d.n_neg else (1 if d.n_pos < d.n_neg else -1)
    verify = None
    lines = [f"lambda upper bound {bound:.10g}"]
    if report.termination != "converged":
        lines.append("warning: the lambda=0 solve stopped at max_iter")
    if a.verify:
        lam = max(bound, 0.0)
        s2, _ = smo_train(d, k, h.with_(lam=lam), wss=WSS_NAMES[a.wss])
        idx = tuning._minority(d.labels)
        amin = float(s2.alpha[idx].min())
        holds = amin >= h.upper - 10 * h.kkt_tol
        verify = {"lambda": lam, "min_minority_alpha": amin, "c_bar": h.upper, "holds": bool(holds)}
        lines.append(f"at lambda={lam:.6g}: min minority alpha {amin:.10g} vs C-gamma {h.upper:.10g} "
                     f"({'holds' if holds else 'does NOT hold'})")
    doc = {"command": "bound", "bound": bound, "C": a.C, "gamma": a.gamma,
           "minority_label": minority, "verify": verify}
    _emit(a, doc, lines)
    return EXIT_OK


def cmd_bench_wss(a) -> int:
    if a.data:
        d = load_csv(a.data, _label(a))
        if not a.no_scale:
            d = apply_scaling(d, fit_scaling(d))
        instances = [d]
    else:
        instances = synthetic_suite(seed=a.seed, count=a.instances, n=a.n, p=2)
    lam = tuning.lambda_choice(a.C) if a.lambda_choice else (a.lam or 0.0)
    h = _hyper(a, a.C, lam)
    k = _kernel_of(a)
    stats = {name: {"iters": [], "obj": [], "conv": 0, "times": []} for name in WSS_NAMES}
    for d in instances:
        for name, kind in WSS_NAMES.items():
            for _ in range(a.repeats):
                state, rep = smo_train(d, k, h, wss=kind)
                stats[name]["times"].append(rep.wall_time)
            stats[name]["iters"].append(rep.iterations)
            stats[name]["obj"].append(rep.objective_final)
            stats[name]["conv"] += rep.termination == "converged"
    it1 = float(np.mean(stats["first"]["iters"]))
    it2 = float(np.mean(stats["second"]["iters"]))
    diff = float(np.max(np.abs(np.subtract(stats["first"]["obj"], stats["second"]["obj"]))))
    t1, t2 = stats["first"]["times"], stats["second"]["times"]
    doc = {
        "command": "bench-wss",
        "instances": len(instances),
        "repeats": a.repeats,
        "first": {"iterations_mean": it1, "objective_mean": float(np.mean(stats["first"]["obj"])),
                  "converged": stats["first"]["conv"]},
        "second": {"iterations_mean": it2, "objective_mean": float(np.mean(stats["second"]["obj"])),
                   "converged": stats["second"]["conv"]},
        "iteration_ratio": it2 / it1 if it1 else float("nan"),
        "max_objective_diff": diff,
        "timing": {"first_mean": float(np.mean(t1)), "first_min": float(np.min(t1)),
                   "second_mean": float(np.mean(t2)), "second_min": float(np.min(t2)),
                   "time_ratio": float(np.mean(t2) / np.mean(t1)) if np.mean(t1) > 0 else 0.0},
    }
    tm = doc["timing"]
    _emit(a, doc, [
        f"{'strategy':<10}{'iterations':>12}{'mean s':>12}{'min s':>12}",
        f"{'first':<10}{it1:>12.1f}{tm['first_mean']:>12.4f}{tm['first_min']:>12.4f}",
        f"{'second':<10}{it2:>12.1f}{tm['second_mean']:>12.4f}{tm['second_min']:>12.4f}",
        f"iteration ratio second/first {doc['iteration_ratio']:.3f}",
        f"max objective difference     {diff:.3e}",
    ])
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sklr", description="Sparse kernel logistic regression trained by SMO.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("train", help="train a model and save it as JSON")
    _data_args(p)
    p.add_argument("-C", type=float, default=1.0)
    _lambda_args(p)
    _kernel_args(p)
    _solver_args(p)
    p.add_argument("--out", default="model.json", help="model file to write")
    _common(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="decision values, probabilities and labels for a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--label", default=None, help="label column to drop, if present")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    _common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("eval", help="accuracy of a saved model on labelled data")
    p.add_argument("--model", required=True)
    _data_args(p)
    _common(p)
    p.set_defaults(func=cmd_eval)

    for name, func, helptext in (("cv", cmd_cv, "k-fold cross-validation with per-fold selection"),
                                 ("grid", cmd_grid, "evaluate the (C, lambda) grid on one hold-out split")):
        p = sub.add_parser(name, help=helptext)
        _data_args(p)
        _lambda_args(p, fixed_help="fixed lambda for every C (default: lambda grid)")
        p.add_argument("--c-values", default=None, help="comma-separated C values (default 1e-4..1e4)")
        p.add_argument("--n-lambda", type=int, default=10)
        p.add_argument("--selection-rule", choices=sorted(RULE_NAMES), default="best-accuracy")
        p.add_argument("--out", default=None, help="CSV of all cells")
        if name == "cv":
            p.add_argument("--k", type=int, default=5)
            p.add_argument("--val-fraction", type=float, default=0.05)
        else:
            p.add_argument("--test-fraction", type=float, default=0.2)
        _kernel_args(p)
        _solver_args(p)
        _common(p)
        p.set_defaults(func=func)

    p = sub.add_parser("sweep", help="accuracy and sparsity along the lambda grid at fixed C")
    _data_args(p)
    p.add_argument("-C", type=float, default=1.0)
    p.add_argument("--n-lambda", type=int, default=10)
    p.add_argument("--test-fraction", type=float, default=0.3,
                   help="hold-out fraction; 0 trains and scores on all data")
    p.add_argument("--out", default=None, help="output CSV (default: stdout)")
    _kernel_args(p)
    _solver_args(p)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bound", help="lambda value that pins the minority class at C - gamma")
    _data_args(p)
    p.add_argument("-C", type=float, default=1.0)
    p.add_argument("--verify", action="store_true", help="re-solve at the bound and check it")
    _kernel_args(p)
    _solver_args(p)
    _common(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("bench-wss", help="first- vs second-order working-set selection")
    _data_args(p, required=False)
    p.add_argument("-C", type=float, default=1.0)
    _lambda_args(p)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--instances", type=int, default=20, help="synthetic instances when no --data")
    p.add_argument("--n", type=int, default=200, help="points per synthetic instance")
    _kernel_args(p)
    _solver_args(p)
    _common(p)
    p.set_defaults(func=cmd_bench_wss)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    try:
        if args.threads < 1:
            raise DataError("--threads must be >= 1")
        return args.func(args)
    except SolverContractError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except (SklrError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
