"""Kernel functions and a memoizing kernel-row cache for the solver."""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .errors import DataError

KINDS = ("gaussian", "linear", "polynomial")


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "gaussian"
    sigma: float = 1.0
    degree: int = 3
    coef: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown kernel {self.kind!r}; expected one of {KINDS}")
        if self.kind == "gaussian" and not self.sigma > 0:
            raise DataError(f"gaussian sigma must be > 0, got {self.sigma}")
        if self.kind == "polynomial" and (int(self.degree) != self.degree or self.degree < 1):
            raise DataError(f"polynomial degree must be an integer >= 1, got {self.degree}")

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "KernelSpec":
        return cls("gaussian", sigma=sigma)

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls("linear")

    @classmethod
    def polynomial(cls, degree: int = 3, coef: float = 1.0) -> "KernelSpec":
        return cls("polynomial", degree=degree, coef=coef)

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return {"kind": "gaussian", "sigma": self.sigma}
        if self.kind == "linear":
            return {"kind": "linear"}
        return {"kind": "polynomial", "degree": int(self.degree), "coef": self.coef}

    @classmethod
    def from_dict(cls, d: dict) -> "KernelSpec":
        return cls(**d)

    @property
    def is_psd(self) -> bool:
        return self.kind in ("gaussian", "linear") or (
            self.kind == "polynomial" and self.coef >= 0
        )


def _accumulate(spec: KernelSpec, X: np.ndarray, x: np.ndarray) -> np.ndarray:
    # Features are summed one at a time in index order so every entry is
    # produced by the same sequence of floating point operations, whatever
    # the caller (row, matrix, diagonal): this is what makes the cache
    # symmetric and mode-independent bit for bit.
    acc = np.zeros(X.shape[0])
    if spec.kind == "gaussian":
        for f in range(X.shape[1]):
            diff = X[:, f] - x[f]
            acc += diff * diff
        return np.exp(-acc / (2.0 * spec.sigma * spec.sigma))
    for f in range(X.shape[1]):
        acc += X[:, f] * x[f]
    if spec.kind == "linear":
        return acc
    return (acc + spec.coef) ** int(spec.degree)


def kernel_eval(spec: KernelSpec, a, b) -> float:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise DataError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(_accumulate(spec, a[None, :], b)[0])


def kernel_matrix(spec: KernelSpec, A, B) -> np.ndarray:
    """Dense ``len(A) x len(B)`` kernel matrix, column by column."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise DataError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]} features")
    out = np.empty((A.shape[0], B.shape[0]))
    for j in range(B.shape[0]):
        out[:, j] = _accumulate(spec, A, B[j])
    return out


class KernelCache:
    """Kernel rows of one training matrix, either fully precomputed or LRU-cached.

    Rows are returned as read-only arrays. The LRU variant is meant for a
    single solver; build one cache per concurrent worker.
    """

    def __init__(self, spec: KernelSpec, X, mode: str = "full", capacity: int = 512):
        if mode not in ("full", "lru"):
            raise ValueError(f"mode must be 'full' or 'lru', got {mode!r}")
        self.spec = spec
        self.X = np.array(X, dtype=float)
        self.X.flags.writeable = False
        self.mode = mode
        self.capacity = max(1, int(capacity))
        self.hits = 0
        self.misses = 0
        n = self.X.shape[0]
        # row(i)[i] goes through the same accumulation, so diag == row(i)[i]
        diag = np.empty(n)
        for i in range(n):
            diag[i] = _accumulate(spec, self.X[i : i + 1], self.X[i])[0]
        diag.flags.writeable = False
        self.diag = diag
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self._full = None
        if mode == "full":
            full = np.empty((n, n))
            for i in range(n):
                full[i] = _accumulate(spec, self.X, self.X[i])
            full.flags.writeable = False
            self._full = full

    @property
    def n(self) -> int:
        return self.X.shape[0]

    def row(self, i: int) -> np.ndarray:
        if self._full is not None:
            return self._full[i]
        r = self._rows.get(i)
        if r is not None:
            self.hits += 1
            self._rows.move_to_end(i)
            return r
        self.misses += 1
        r = _accumulate(self.spec, self.X, self.X[i])
        r.flags.writeable = False
        self._rows[i] = r
        if len(self._rows) > self.capacity:
            self._rows.popitem(last=False)
        return r

    def entry(self, i: int, j: int) -> float:
        if self._full is not None:
            return float(self._full[i, j])
        if j in self._rows and i not in self._rows:
            return float(self.row(j)[i])
        return float(self.row(i)[j])

    def matrix(self) -> np.ndarray:
        if self._full is not None:
            return self._full
        return np.vstack([self.row(i) for i in range(self.n)])


def build_cache(spec: KernelSpec, d, full_threshold: int = 8000, capacity: int | None = None) -> KernelCache:
    """Precompute the full matrix for ``N <= full_threshold``, else use a row LRU.

    The default LRU capacity is ``max(2 * p, 512)`` rows.
    """
    X = d.features if hasattr(d, "features") else np.asarray(d, dtype=float)
    n, p = X.shape
    if n <= full_threshold:
        return KernelCache(spec, X, "full")
    if capacity is None:
        capacity = max(2 * p, 512)
    return KernelCache(spec, X, "lru", capacity)
