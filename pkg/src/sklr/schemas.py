"""JSON Schemas for the model file and for every ``--json`` CLI output.

Timing fields live under a ``timing`` object so they can be dropped before
comparing outputs of repeated runs.
"""

from __future__ import annotations

_NUM = {"type": "number"}
_INT = {"type": "integer", "minimum": 0}
_STR = {"type": "string"}
_RATIO = {"type": "number", "minimum": 0, "maximum": 1}
_NULLABLE_STR = {"type": ["string", "null"]}


def _obj(props: dict, required=None) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": sorted(props) if required is None else required,
        "additionalProperties": False,
    }


def _timing(*names: str) -> dict:
    return _obj({n: {"type": "number", "minimum": 0} for n in names})


_KERNEL = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["gaussian", "linear", "polynomial"]},
        "sigma": _NUM,
        "degree": {"type": "integer", "minimum": 1},
        "coef": _NUM,
    },
    "required": ["kind"],
    "additionalProperties": False,
}

_HYPER = _obj({
    "C": {"type": "number", "exclusiveMinimum": 0},
    "lambda": {"type": "number", "minimum": 0},
    "gamma": {"type": "number", "exclusiveMinimum": 0},
    "kkt_tol": {"type": "number", "exclusiveMinimum": 0},
    "max_iter": {"type": "integer", "minimum": 1},
    "selection_threshold": {"type": "number", "exclusiveMinimum": 0},
})

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "sklr model file",
    **_obj({
        "format": {"const": "sklr-model"},
        "schema_version": {"const": 1},
        "kernel": _KERNEL,
        "scaling": _obj({"min": {"type": "array", "items": _NUM},
                         "max": {"type": "array", "items": _NUM}}),
        "support": _obj({
            "x": {"type": "array", "items": {"type": "array", "items": _NUM}},
            "coef": {"type": "array", "items": _NUM},
            "index": {"type": "array", "items": _INT},
        }),
        "intercept": _NUM,
        "hyperparams": _HYPER,
        "n_train": _INT,
        "selection_ratio": _RATIO,
        "converged": {"type": "boolean"},
        "flags": {"type": "array", "items": _STR},
    }),
}

_SOLVE = {
    "iterations": _INT,
    "kkt_residual": _NUM,
    "objective": _NUM,
    "termination": {"enum": ["converged", "max_iter"]},
    "warning": _NULLABLE_STR,
}

_CHOSEN = {"type": "array", "items": _obj({"fold": _INT, "C": _NUM, "lambda": _NUM})}

_CELL = _obj({
    "C": _NUM, "lambda": _NUM, "val_acc": _RATIO, "selection_ratio": _RATIO, "iterations": _INT,
})

_STRATEGY = _obj({"iterations_mean": _NUM, "objective_mean": _NUM, "converged": _INT})

COMMAND_SCHEMAS = {
    "train": _obj({
        "command": {"const": "train"},
        "model": _STR,
        **_SOLVE,
        "C": _NUM,
        "lambda": _NUM,
        "wss": {"enum": ["first", "second"]},
        "n_train": _INT,
        "n_support": _INT,
        "selection_ratio": _RATIO,
        "train_accuracy": _RATIO,
        "timing": _timing("seconds"),
    }),
    "predict": _obj({
        "command": {"const": "predict"},
        "n": _INT,
        "n_pos": _INT,
        "out": _NULLABLE_STR,
    }),
    "eval": _obj({
        "command": {"const": "eval"},
        "n": _INT,
        "accuracy": _RATIO,
        "mean_log_loss": _NUM,
        "n_support": _INT,
        "selection_ratio": _RATIO,
    }),
    "cv": _obj({
        "command": {"const": "cv"},
        "k": _INT,
        "rule": {"enum": ["best_accuracy", "sparsest_of_top3"]},
        "lambda_mode": _STR,
        "mean_accuracy": _RATIO,
        "std_accuracy": _NUM,
        "mean_selection_ratio": _RATIO,
        "std_selection_ratio": _NUM,
        "fold_accuracies": {"type": "array", "items": _RATIO},
        "fold_selection_ratios": {"type": "array", "items": _RATIO},
        "chosen": _CHOSEN,
        "out": _NULLABLE_STR,
        "timing": _timing("seconds"),
    }),
    "grid": _obj({
        "command": {"const": "grid"},
        "rule": {"enum": ["best_accuracy", "sparsest_of_top3"]},
        "lambda_mode": _STR,
        "n_cells": _INT,
        "best": _CELL,
        "out": _NULLABLE_STR,
        "timing": _timing("seconds"),
    }),
    "sweep": _obj({
        "command": {"const": "sweep"},
        "C": _NUM,
        "rows": {"type": "array", "items": _obj({
            "lambda": _NUM, "accuracy": _RATIO, "selection_ratio": _RATIO,
            "omega_norm": _NUM, "iterations": _INT,
        })},
        "out": _NULLABLE_STR,
        "timing": _timing("seconds"),
    }),
    "bound": _obj({
        "command": {"const": "bound"},
        "bound": _NUM,
        "C": _NUM,
        "gamma": _NUM,
        "minority_label": {"enum": [-1, 1, 0]},
        "verify": {"oneOf": [
            {"type": "null"},
            _obj({"lambda": _NUM, "min_minority_alpha": _NUM, "c_bar": _NUM, "holds": {"type": "boolean"}}),
        ]},
    }),
    "bench-wss": _obj({
        "command": {"const": "bench-wss"},
        "instances": _INT,
        "repeats": _INT,
        "first": _STRATEGY,
        "second": _STRATEGY,
        "iteration_ratio": _NUM,
        "max_objective_diff": _NUM,
        "timing": _timing("first_mean", "first_min", "second_mean", "second_min", "time_ratio"),
    }),
}
