"""Hyperparameter grids, k-fold model selection and lambda diagnostics."""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, stratified_kfold, validation_split
from .dual import Hyperparams
from .errors import DataError
from .kernel import KernelSpec, kernel_matrix
from .model import accuracy, primal_diagnostics, train_model
from .solver import SECOND_ORDER, smo_train

BEST_ACCURACY = "best_accuracy"
SPARSEST_OF_TOP3 = "sparsest_of_top3"
SELECTION_RULES = (BEST_ACCURACY, SPARSEST_OF_TOP3)
CSV_HEADER = ["fold", "C", "lambda", "val_acc", "test_acc", "selection_ratio", "iterations", "seconds"]


def c_grid() -> list[float]:
    return [float(f"1e{r}") for r in range(-4, 5)]


def lambda_grid(C: float, n: int = 10) -> list[float]:
    """``n`` equally spaced values on ``[0, C]``, both ends included."""
    if C <= 0:
        raise DataError(f"C must be positive, got {C}")
    if n < 2:
        return [0.0]
    vals = [C * k / (n - 1) for k in range(n)]
    vals[-1] = float(C)
    return vals


def lambda_choice(C: float) -> float:
    return C / 10.0


@dataclass(frozen=True)
class GridCell:
    C: float
    lam: float
    val_accuracy: float
    selection_ratio: float
    iterations: int = 0
    seconds: float = 0.0
    termination: str = "converged"
    fold: int = -1
    test_accuracy: float | None = None


@dataclass(frozen=True)
class FoldOutcome:
    fold: int
    chosen: GridCell
    test_accuracy: float
    selection_ratio: float
    iterations: int
    seconds: float


@dataclass
class CvResult:
    rule: str
    lambda_mode: str
    folds: list[FoldOutcome]
    cells: list[GridCell] = field(default_factory=list)

    @property
    def accuracies(self) -> np.ndarray:
        return np.array([f.test_accuracy for f in self.folds])

    @property
    def ratios(self) -> np.ndarray:
        return np.array([f.selection_ratio for f in self.folds])

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.accuracies))

    @property
    def std_accuracy(self) -> float:
        return float(np.std(self.accuracies))

    @property
    def mean_ratio(self) -> float:
        return float(np.mean(self.ratios))

    @property
    def std_ratio(self) -> float:
        return float(np.std(self.ratios))

    def rows(self) -> list[list]:
        """CSV rows: every evaluated grid cell, then one row per retrained fold model.

        Fold rows are the ones with ``test_acc`` filled in.
        """
        out = []
        for c in self.cells:
            out.append([c.fold, c.C, c.lam, c.val_accuracy, "", c.selection_ratio,
                        c.iterations, f"{c.seconds:.6f}"])
        for f in self.folds:
            out.append([f.fold, f.chosen.C, f.chosen.lam, f.chosen.val_accuracy, f.test_accuracy,
                        f.selection_ratio, f.iterations, f"{f.seconds:.6f}"])
        return out

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(self.rows())

    def summary(self) -> dict:
        return {
            "rule": self.rule,
            "lambda_mode": self.lambda_mode,
            "k": len(self.folds),
            "mean_accuracy": self.mean_accuracy,
            "std_accuracy": self.std_accuracy,
            "mean_selection_ratio": self.mean_ratio,
            "std_selection_ratio": self.std_ratio,
            "chosen": [{"fold": f.fold, "C": f.chosen.C, "lambda": f.chosen.lam} for f in self.folds],
        }


# ---------------------------------------------------------------------------
# selection rules


def best_accuracy(cells: list[GridCell]) -> GridCell:
    """Highest validation accuracy; ties go to lower ratio, then smaller lambda, then smaller C."""
    if not cells:
        raise DataError("no grid cells to select from")
    return min(cells, key=lambda c: (-c.val_accuracy, c.selection_ratio, c.lam, c.C))


def sparsest_of_top3(cells: list[GridCell]) -> GridCell:
    """Lowest selection ratio among the three most accurate cells."""
    if not cells:
        raise DataError("no grid cells to select from")
    top = sorted(cells, key=lambda c: (-c.val_accuracy, c.selection_ratio, c.lam, c.C))[:3]
    return min(top, key=lambda c: (c.selection_ratio, -c.val_accuracy, c.lam, c.C))


_RULES = {BEST_ACCURACY: best_accuracy, SPARSEST_OF_TOP3: sparsest_of_top3}


def select(cells: list[GridCell], rule: str) -> GridCell:
    try:
        return _RULES[rule](cells)
    except KeyError:
        raise DataError(f"unknown selection rule {rule!r}; choose from {SELECTION_RULES}") from None


# ---------------------------------------------------------------------------
# lambda diagnostics


def _minority(y: np.ndarray) -> np.ndarray:
    n_pos, n_neg = int(np.sum(y > 0)), int(np.sum(y < 0))
    if n_pos == n_neg:
        return np.arange(y.size)
    return np.flatnonzero(y > 0) if n_pos < n_neg else np.flatnonzero(y < 0)


def lambda_upper_bound(d: Dataset, k: KernelSpec, C: float, gamma: float, alpha0) -> float:
    """``max_{i minority} sum_j (C - gamma - a_j(0)) y_j K_ji`` for the lambda=0 solution ``alpha0``.

    Solving at a lambda at least this large pins every minority-class
    variable at the upper bound ``C - gamma``. With balanced classes every
    point counts as minority.
    """
    a0 = np.asarray(alpha0, dtype=float)
    if a0.shape != (d.n,):
        raise DataError(f"alpha0 has shape {a0.shape}, expected ({d.n},)")
    idx = _minority(d.labels)
    worst = int(idx[np.argmax(a0[idx])])
    if not gamma < C - a0[worst]:
        raise DataError(
            f"gamma={gamma:g} violates gamma < C - max minority alpha: "
            f"alpha[{worst}]={a0[worst]!r}, C - alpha = {C - a0[worst]!r}"
        )
    K = kernel_matrix(k, d.features, d.features[idx])
    w = (C - gamma - a0) * d.labels
    return float(np.max(w @ K))


def saturation_diagnostic(d: Dataset, k: KernelSpec, h: Hyperparams) -> tuple[float, float]:
    """``(sum alpha, 2 C n_min)`` at the given (large) lambda."""
    state, _ = smo_train(d, k, h)
    return float(state.alpha.sum()), 2.0 * h.C * min(d.n_pos, d.n_neg)


def lambda_sweep(train: Dataset, test: Dataset, k: KernelSpec, h: Hyperparams,
                 lambdas, wss: str = SECOND_ORDER, scale: bool = True) -> list[dict]:
    """Train at each lambda and score on ``test``; one record per lambda."""
    out = []
    for lam in lambdas:
        model, state, report = train_model(train, k, h.with_(lam=float(lam)), wss=wss, scale=scale)
        diag = primal_diagnostics(state, h.with_(lam=float(lam)))
        out.append({
            "lambda": float(lam),
            "accuracy": accuracy(model, test),
            "selection_ratio": model.selection_ratio,
            "omega_norm": math.sqrt(max(diag.omega_norm_sq, 0.0)),
            "iterations": report.iterations,
        })
    return out


# ---------------------------------------------------------------------------
# k-fold protocol


def _cell_params(C: float, lambda_mode, n_lambda: int) -> list[float]:
    if lambda_mode == "grid":
        return lambda_grid(C, n_lambda)
    if lambda_mode == "choice":
        return [lambda_choice(C)]
    return [float(lambda_mode)]


def _mode_name(lambda_mode) -> str:
    if lambda_mode in ("grid", "choice"):
        return lambda_mode
    return f"fixed({float(lambda_mode):g})"


def _check_mode(lambda_mode) -> None:
    if lambda_mode in ("grid", "choice"):
        return
    if isinstance(lambda_mode, bool) or not isinstance(lambda_mode, (int, float)) or lambda_mode < 0:
        raise DataError(f"lambda_mode must be 'grid', 'choice' or a number >= 0, got {lambda_mode!r}")


def _eval_cell(job):
    fold, train, val, kernel, h, wss, scale = job
    t0 = time.monotonic()
    model, _, report = train_model(train, kernel, h, wss=wss, scale=scale)
    return GridCell(
        C=h.C, lam=h.lam, val_accuracy=accuracy(model, val),
        selection_ratio=model.selection_ratio, iterations=report.iterations,
        seconds=time.monotonic() - t0, termination=report.termination, fold=fold,
    )


def _pool(threads: int):
    return ProcessPoolExecutor(max_workers=threads) if threads > 1 else None


def _grid_cells(train, val, kernel, base_h, lambda_mode, c_values, n_lambda, wss, scale, fold, pool):
    jobs = [
        (fold, train, val, kernel, base_h.with_(C=C, lam=lam), wss, scale)
        for C in c_values
        for lam in _cell_params(C, lambda_mode, n_lambda)
    ]
    if pool is None:
        return [_eval_cell(j) for j in jobs]
    return list(pool.map(_eval_cell, jobs))


def grid_search(train: Dataset, val: Dataset, kernel: KernelSpec, base_h: Hyperparams,
                lambda_mode="grid", c_values=None, n_lambda: int = 10, wss: str = SECOND_ORDER,
                threads: int = 1, scale: bool = True, fold: int = 0) -> list[GridCell]:
    """Train every (C, lambda) cell on ``train`` and score it on ``val``.

    Cells come back in (C, lambda) order whatever the thread count.
    """
    _check_mode(lambda_mode)
    c_values = list(c_grid() if c_values is None else c_values)
    pool = _pool(threads)
    try:
        return _grid_cells(train, val, kernel, base_h, lambda_mode, c_values, n_lambda, wss, scale, fold, pool)
    finally:
        if pool is not None:
            pool.shutdown()


def kfold_grid_search(
    d: Dataset,
    k_folds: int,
    kernel: KernelSpec,
    base_h: Hyperparams,
    lambda_mode="grid",
    seed: int = 0,
    c_values=None,
    n_lambda: int = 10,
    rule: str = BEST_ACCURACY,
    val_fraction: float = 0.05,
    threads: int = 1,
    wss: str = SECOND_ORDER,
    scale: bool = True,
) -> CvResult:
    """Per-fold model selection on a validation split, then retrain and test.

    ``lambda_mode`` is ``"grid"``, ``"choice"`` (lambda = C/10) or a number
    for a fixed lambda. Cells are evaluated in (C, lambda) order; with
    ``threads > 1`` they run in a process pool and are merged in that order.
    """
    if rule not in SELECTION_RULES:
        raise DataError(f"unknown selection rule {rule!r}; choose from {SELECTION_RULES}")
    _check_mode(lambda_mode)
    c_values = list(c_grid() if c_values is None else c_values)
    plan = stratified_kfold(d, k_folds, seed)
    folds, cells = [], []
    pool = _pool(threads)
    try:
        for f in range(k_folds):
            train_full = d.subset(plan.train_indices(f))
            test = d.subset(plan.test_indices(f))
            train, val = validation_split(train_full, val_fraction, seed + 1000 * (f + 1))
            fold_cells = _grid_cells(train, val, kernel, base_h, lambda_mode, c_values,
                                     n_lambda, wss, scale, f, pool)
            cells.extend(fold_cells)
            best = select(fold_cells, rule)
            t0 = time.monotonic()
            model, _, report = train_model(train_full, kernel, base_h.with_(C=best.C, lam=best.lam),
                                           wss=wss, scale=scale)
            folds.append(FoldOutcome(
                fold=f, chosen=best, test_accuracy=accuracy(model, test),
                selection_ratio=model.selection_ratio, iterations=report.iterations,
                seconds=time.monotonic() - t0,
            ))
    finally:
        if pool is not None:
            pool.shutdown()
    return CvResult(rule=rule, lambda_mode=_mode_name(lambda_mode), folds=folds, cells=cells)
