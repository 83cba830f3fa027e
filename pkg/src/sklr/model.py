"""Turning a solved dual into a sparse probabilistic classifier.

The decision function is ``dec(x) = sum_i beta_i K(x_i, x) - b`` with
``beta_i = alpha_i y_i`` and ``P(+1 | x) = 1 / (1 + exp(-dec(x)))``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, ScalingParams, apply_scaling, fit_scaling
from .dual import DualState, Hyperparams, gp_scaled, index_masks, violations
from .errors import ModelFormatError, ModelVersionError
from .kernel import KernelSpec, build_cache, kernel_matrix
from .solver import SECOND_ORDER, SolveReport, smo_train

SCHEMA_VERSION = 1
FORMAT_NAME = "sklr-model"


@dataclass(frozen=True)
class TrainedModel:
    kernel: KernelSpec
    scaling: ScalingParams
    support_x: np.ndarray
    support_coef: np.ndarray
    intercept: float
    hyperparams: Hyperparams
    n_train: int
    converged: bool = True
    support_index: tuple = ()
    flags: tuple = ()

    @property
    def n_support(self) -> int:
        return int(self.support_coef.shape[0])

    @property
    def selection_ratio(self) -> float:
        return self.n_support / self.n_train if self.n_train else 0.0

    @property
    def p(self) -> int:
        return int(self.scaling.min.shape[0])


@dataclass(frozen=True)
class PrimalDiagnostics:
    omega_norm_sq: float
    rho_recovered: float
    b_recovered: float
    rho_residual: float
    n_equations: int


def kkt_interval(state: DualState, h: Hyperparams) -> tuple[float, float]:
    """``(max_{I_up} -y grad, min_{I_low} -y grad)``; optimal when nearly equal."""
    F = violations(state, h)
    up, low = index_masks(state.alpha, state.y, h)
    return float(F[up].max()), float(F[low].min())


def compute_intercept(state: DualState, h: Hyperparams) -> float:
    """Primal intercept ``b`` for ``dec(x) = sum beta K - b``.

    The KKT multiplier of the equality constraint is the midpoint of the
    interval from :func:`kkt_interval`; the primal intercept is its negative.
    """
    top, bottom = kkt_interval(state, h)
    return -0.5 * (top + bottom)


def finalize(d: Dataset, state: DualState, h: Hyperparams, s: ScalingParams,
             kernel: KernelSpec | None = None) -> TrainedModel:
    """Keep the points with ``alpha_i > selection_threshold`` as the model.

    ``d`` is the (already scaled) dataset the state was trained on.
    """
    kernel = kernel or state.cache.spec
    top, bottom = kkt_interval(state, h)
    b = -0.5 * (top + bottom)
    keep = np.flatnonzero(state.alpha > h.selection_threshold)
    flags = []
    converged = top - bottom <= h.kkt_tol
    if not converged:
        flags.append("not_converged")
    if keep.size == 0:
        flags.append("no_support_points")
    sx = np.array(d.features[keep], dtype=float)
    coef = state.alpha[keep] * state.y[keep]
    return TrainedModel(
        kernel=kernel,
        scaling=s,
        support_x=sx,
        support_coef=coef,
        intercept=b,
        hyperparams=h,
        n_train=d.n,
        converged=converged,
        support_index=tuple(int(i) for i in keep),
        flags=tuple(flags),
    )


def decision_value(m: TrainedModel, x_raw):
    """Decision value(s) for raw (unscaled) input; a vector gives a float."""
    x = np.asarray(x_raw, dtype=float)
    single = x.ndim == 1
    X = m.scaling.transform(np.atleast_2d(x))
    if m.n_support == 0:
        out = np.full(X.shape[0], -m.intercept)
    else:
        out = kernel_matrix(m.kernel, X, m.support_x) @ m.support_coef - m.intercept
    return float(out[0]) if single else out


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def predict_proba(m: TrainedModel, x_raw):
    """``P(+1 | x)``; ``P(-1 | x)`` is ``1 - P(+1 | x)``."""
    return sigmoid(decision_value(m, x_raw))


def predict_label(m: TrainedModel, x_raw):
    dec = decision_value(m, x_raw)
    return np.where(np.asarray(dec) >= 0.0, 1.0, -1.0)


def accuracy(m: TrainedModel, d: Dataset) -> float:
    if d.n == 0:
        return float("nan")
    return float(np.mean(predict_label(m, d.features) == d.labels))


def primal_diagnostics(state: DualState, h: Hyperparams) -> PrimalDiagnostics:
    """Recover ``(rho, b)`` from ``rho - y_i m_i + y_i b = G'(a_i / C)`` by least squares.

    Only variables strictly inside the box enter the fit (at a pinned
    variable the equation carries a bound multiplier); if none is free, all
    are used.
    """
    a, y, m = state.alpha, state.y, state.m
    free = (a > h.lower) & (a < h.upper)
    use = free if free.any() else np.ones_like(free)
    A = np.column_stack([np.ones(int(use.sum())), y[use]])
    rhs = gp_scaled(a[use], h.C) + y[use] * m[use]
    (rho, b), *_ = np.linalg.lstsq(A, rhs, rcond=None)
    resid = float(np.max(np.abs(A @ np.array([rho, b]) - rhs)))
    omega = float(np.dot(a * y, m))
    return PrimalDiagnostics(omega, float(rho), float(b), resid, int(use.sum()))


def train_model(d: Dataset, kernel: KernelSpec, h: Hyperparams, wss: str = SECOND_ORDER,
                audit: bool = False, scale: bool = True) -> tuple[TrainedModel, DualState, SolveReport]:
    """Fit scaling on ``d``, solve the dual on the scaled data and finalize.

    With ``scale=False`` the identity scaling is used and the raw features
    enter the kernel.
    """
    s = fit_scaling(d) if scale else ScalingParams.identity(d.p)
    ds = apply_scaling(d, s)
    state, report = smo_train(ds, build_cache(kernel, ds), h, wss=wss, audit=audit)
    return finalize(ds, state, h, s, kernel), state, report


# ---------------------------------------------------------------------------
# persistence


def model_to_dict(m: TrainedModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "schema_version": SCHEMA_VERSION,
        "kernel": m.kernel.to_dict(),
        "scaling": {"min": m.scaling.min.tolist(), "max": m.scaling.max.tolist()},
        "support": {
            "x": m.support_x.tolist(),
            "coef": m.support_coef.tolist(),
            "index": list(m.support_index),
        },
        "intercept": m.intercept,
        "hyperparams": m.hyperparams.to_dict(),
        "n_train": m.n_train,
        "selection_ratio": m.selection_ratio,
        "converged": m.converged,
        "flags": list(m.flags),
    }


def model_from_dict(doc: dict) -> TrainedModel:
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_NAME:
        raise ModelFormatError("not a sklr model document")
    version = doc.get("schema_version")
    if not isinstance(version, int):
        raise ModelFormatError("missing schema_version")
    if version > SCHEMA_VERSION:
        raise ModelVersionError(
            f"model schema version {version} is newer than supported version {SCHEMA_VERSION}"
        )
    try:
        p = len(doc["scaling"]["min"])
        sx = np.array(doc["support"]["x"], dtype=float).reshape(-1, p)
        coef = np.array(doc["support"]["coef"], dtype=float)
        if coef.shape[0] != sx.shape[0]:
            raise ModelFormatError("support coordinates and coefficients differ in length")
        return TrainedModel(
            kernel=KernelSpec.from_dict(doc["kernel"]),
            scaling=ScalingParams(np.array(doc["scaling"]["min"]), np.array(doc["scaling"]["max"])),
            support_x=sx,
            support_coef=coef,
            intercept=float(doc["intercept"]),
            hyperparams=Hyperparams.from_dict(doc["hyperparams"]),
            n_train=int(doc["n_train"]),
            converged=bool(doc.get("converged", True)),
            support_index=tuple(doc["support"].get("index", ())),
            flags=tuple(doc.get("flags", ())),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"malformed model document: {exc}") from exc


def save_model(m: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(m), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> TrainedModel:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: invalid JSON ({exc})") from exc
    except OSError as exc:
        raise ModelFormatError(f"{path}: cannot read model ({exc})") from exc
    return model_from_dict(doc)
