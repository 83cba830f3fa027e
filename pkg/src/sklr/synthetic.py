"""Seeded synthetic datasets used by the CLI demos and the test suites."""

from __future__ import annotations

import numpy as np

from .data import Dataset


def make_synth(seed: int = 0, n_pos: int = 50, n_neg: int = 49, spread: float = 1.0) -> Dataset:
    """Two overlapping Gaussian clouds in the plane (99 points by default).

    Class centres are ``(1, 1)`` and ``(-1, -1)`` with isotropic standard
    deviation ``spread``: the classes are not linearly separable, yet a line
    classifies about 90% of the points.
    """
    rng = np.random.default_rng(seed)
    pos = rng.normal(loc=(1.0, 1.0), scale=spread, size=(n_pos, 2))
    neg = rng.normal(loc=(-1.0, -1.0), scale=spread, size=(n_neg, 2))
    X = np.vstack([pos, neg])
    y = np.concatenate([np.ones(n_pos), -np.ones(n_neg)])
    order = rng.permutation(X.shape[0])
    return Dataset(X[order], y[order])


def make_blobs(rng: np.random.Generator, n: int, p: int, shift: float = 1.5,
               pos_fraction: float = 0.5) -> Dataset:
    """Two Gaussian clouds in ``p`` dimensions with both classes present."""
    n_pos = min(max(int(round(n * pos_fraction)), 1), n - 1)
    y = np.concatenate([np.ones(n_pos), -np.ones(n - n_pos)])
    centre = np.zeros(p)
    centre[0] = shift
    X = rng.normal(size=(n, p)) + np.where(y[:, None] > 0, centre, 0.0)
    order = rng.permutation(n)
    return Dataset(X[order], y[order])


def random_instance(rng: np.random.Generator, n_max: int = 20, p_max: int = 4,
                    n_min: int = 4) -> Dataset:
    """Small random instance with both classes (features uniform in [0, 1])."""
    n = int(rng.integers(n_min, n_max + 1))
    p = int(rng.integers(1, p_max + 1))
    n_pos = int(rng.integers(1, n))
    y = np.concatenate([np.ones(n_pos), -np.ones(n - n_pos)])
    rng.shuffle(y)
    return Dataset(rng.uniform(size=(n, p)), y)


def synthetic_suite(seed: int = 0, count: int = 5, n: int = 200, p: int = 2) -> list[Dataset]:
    rng = np.random.default_rng(seed)
    return [make_blobs(rng, n, p) for _ in range(count)]
