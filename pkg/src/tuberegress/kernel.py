"""Kernel functions, gamma resolution and an LRU kernel-row cache.

The row cache stores whole rows ``K(x_i, X)`` keyed by training index. Its
state lives in plain arrays so that the compiled SMO loop in
:mod:`tuberegress.svr` can share it without going back through Python.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numba
import numpy as np

from .errors import DimensionMismatch, ZeroVariance

RBF, LINEAR, POLY = 0, 1, 2
_KIND_CODES = {"rbf": RBF, "linear": LINEAR, "poly": POLY}


@dataclass(frozen=True)
class KernelSpec:
    """``gamma`` is ``"scale"``, ``"auto"`` or a positive number."""

    kind: str = "rbf"
    gamma: object = "scale"
    coef0: float = 0.0
    degree: int = 3

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown kernel {self.kind!r}")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if not isinstance(self.gamma, str):
            if not float(self.gamma) > 0:
                raise ValueError("fixed gamma must be > 0")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.gamma not in ("scale", "auto"):
            raise ValueError(f"gamma must be 'scale', 'auto' or a number, got {self.gamma!r}")

    @property
    def code(self) -> int:
        return _KIND_CODES[self.kind]

    @property
    def resolved(self) -> bool:
        return not isinstance(self.gamma, str)

    def as_dict(self):
        return {"kind": self.kind, "gamma": self.gamma, "coef0": self.coef0, "degree": self.degree}


def resolve_gamma(spec: KernelSpec, X: np.ndarray) -> float:
    """``scale``: 1 / (d * pooled population variance); ``auto``: 1 / d."""
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        raise ValueError("X must be non-empty")
    d = X.shape[1] if X.ndim == 2 else 1
    if spec.gamma == "scale":
        var = float(X.var())
        if not var > 0:
            raise ZeroVariance("gamma='scale' undefined for constant X")
        return 1.0 / (d * var)
    if spec.gamma == "auto":
        return 1.0 / d
    return float(spec.gamma)


def resolve(spec: KernelSpec, X: np.ndarray) -> KernelSpec:
    """Copy of ``spec`` with gamma replaced by its numeric value."""
    if spec.resolved:
        return spec
    return replace(spec, gamma=resolve_gamma(spec, X))


@numba.njit(cache=True, nogil=True)
def _k(a, b, kind, gamma, coef0, degree):
    if kind == RBF:
        s = 0.0
        for t in range(a.shape[0]):
            diff = a[t] - b[t]
            s += diff * diff
        return np.exp(-gamma * s)
    dot = 0.0
    for t in range(a.shape[0]):
        dot += a[t] * b[t]
    if kind == LINEAR:
        return dot
    return (gamma * dot + coef0) ** degree


@numba.njit(cache=True, nogil=True)
def _fill_row(X, i, kind, gamma, coef0, degree, out):
    xi = X[i]
    for j in range(X.shape[0]):
        out[j] = _k(xi, X[j], kind, gamma, coef0, degree)


@numba.njit(cache=True, nogil=True)
def _cross(A, B, kind, gamma, coef0, degree):
    out = np.empty((A.shape[0], B.shape[0]))
    for i in range(A.shape[0]):
        for j in range(B.shape[0]):
            out[i, j] = _k(A[i], B[j], kind, gamma, coef0, degree)
    return out


def _check_resolved(spec):
    if not spec.resolved:
        raise ValueError("gamma must be resolved to a number first (see resolve_gamma)")


def kernel_eval(spec: KernelSpec, x, x2) -> float:
    _check_resolved(spec)
    x = np.ascontiguousarray(x, dtype=float).ravel()
    x2 = np.ascontiguousarray(x2, dtype=float).ravel()
    if x.shape != x2.shape:
        raise DimensionMismatch(f"{x.shape[0]} vs {x2.shape[0]}")
    return float(_k(x, x2, spec.code, spec.gamma, float(spec.coef0), int(spec.degree)))


def kernel_matrix(spec: KernelSpec, A, B=None) -> np.ndarray:
    """Dense ``K(A_i, B_j)``; evaluated elementwise, same arithmetic as rows."""
    _check_resolved(spec)
    A = np.ascontiguousarray(A, dtype=float)
    B = A if B is None else np.ascontiguousarray(B, dtype=float)
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatch(f"{A.shape[1]} vs {B.shape[1]} columns")
    return _cross(A, B, spec.code, spec.gamma, float(spec.coef0), int(spec.degree))


# --- row cache -------------------------------------------------------------

@numba.njit(cache=True, nogil=True)
def _cache_get(i, X, kind, gamma, coef0, degree, data, slot_of, owner, stamp, state):
    """Return the slot holding row ``i``, computing it on a miss.

    ``state`` = [clock, used_slots, hits, misses].
    """
    state[0] += 1
    s = slot_of[i]
    if s >= 0:
        stamp[s] = state[0]
        state[2] += 1
        return s
    state[3] += 1
    if state[1] < data.shape[0]:
        s = state[1]
        state[1] += 1
    else:
        s = 0
        for t in range(1, data.shape[0]):
            if stamp[t] < stamp[s]:
                s = t
        slot_of[owner[s]] = -1
    owner[s] = i
    slot_of[i] = s
    stamp[s] = state[0]
    _fill_row(X, i, kind, gamma, coef0, degree, data[s])
    return s


class KernelCache:
    """LRU cache of kernel rows for one training matrix.

    Parameters
    ----------
    X : (n, d) array
        Training matrix; rows are keyed by index into it.
    spec : KernelSpec
        Must have a resolved (numeric) gamma.
    capacity_bytes : int
        Budget for stored rows; at least ``min_rows`` rows are always kept.
    """

    def __init__(self, X, spec: KernelSpec, capacity_bytes: int = 500 * 2**20, min_rows: int = 1):
        _check_resolved(spec)
        self.X = np.ascontiguousarray(X, dtype=float)
        self.spec = spec
        n = self.X.shape[0]
        row_bytes = 8 * n
        self.capacity_bytes = int(capacity_bytes)
        n_slots = min(n, max(min_rows, self.capacity_bytes // row_bytes))
        self.data = np.empty((n_slots, n))
        self.slot_of = np.full(n, -1, dtype=np.int64)
        self.owner = np.full(n_slots, -1, dtype=np.int64)
        self.stamp = np.zeros(n_slots, dtype=np.int64)
        self.state = np.zeros(4, dtype=np.int64)

    @property
    def args(self):
        s = self.spec
        return (self.X, s.code, float(s.gamma), float(s.coef0), int(s.degree),
                self.data, self.slot_of, self.owner, self.stamp, self.state)

    @property
    def n_slots(self) -> int:
        return self.data.shape[0]

    @property
    def resident_bytes(self) -> int:
        return int(self.state[1]) * 8 * self.X.shape[0]

    @property
    def hits(self) -> int:
        return int(self.state[2])

    @property
    def misses(self) -> int:
        return int(self.state[3])

    def get_row(self, i: int) -> np.ndarray:
        """Row ``[K(x_i, x_j)]_j`` (a copy; cache slots get overwritten)."""
        if not 0 <= i < self.X.shape[0]:
            raise IndexError(i)
        return self.data[_cache_get(int(i), *self.args)].copy()


def cache_get_row(cache: KernelCache, i: int) -> np.ndarray:
    return cache.get_row(i)
