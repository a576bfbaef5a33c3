"""Least squares, ridge and k-nearest-neighbour baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import KTooLarge, SingularSystem


@dataclass(frozen=True, eq=False)
class LinearModel:
    coef: np.ndarray
    intercept: float
    lam: float = 0.0

    def predict(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.coef + self.intercept


def _center(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    xm, ym = X.mean(axis=0), y.mean()
    return X - xm, y - ym, xm, ym


def ols_fit(X, y) -> LinearModel:
    """Ordinary least squares with intercept, via SVD-based lstsq."""
    Xc, yc, xm, ym = _center(X, y)
    n, d = Xc.shape
    if n <= d:
        raise SingularSystem(f"OLS needs n > d (n={n}, d={d})")
    w, _, rank, _ = np.linalg.lstsq(Xc, yc, rcond=None)
    if rank < d:
        raise SingularSystem(f"design matrix has rank {rank} < {d}")
    return LinearModel(w, float(ym - xm @ w), 0.0)


def ridge_fit(X, y, lam: float = 1.0) -> LinearModel:
    """Ridge regression with an unpenalised intercept.

    Solved as least squares on the centred design stacked with
    ``sqrt(lam) * I``, which avoids forming ``X'X``.
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    Xc, yc, xm, ym = _center(X, y)
    d = Xc.shape[1]
    A = np.vstack([Xc, np.sqrt(lam) * np.eye(d)])
    b = np.concatenate([yc, np.zeros(d)])
    w = np.linalg.lstsq(A, b, rcond=None)[0]
    return LinearModel(w, float(ym - xm @ w), float(lam))


@dataclass(frozen=True, eq=False)
class KnnModel:
    X: np.ndarray
    y: np.ndarray
    k: int = 5

    def predict(self, Q, chunk: int = 512) -> np.ndarray:
        return knn_predict(self, Q, chunk)


def knn_fit(X, y, k: int = 5) -> KnnModel:
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if not 1 <= k <= len(y):
        raise KTooLarge(f"k={k} with {len(y)} training rows")
    return KnnModel(X, y, int(k))


@numba.njit(cache=True, nogil=True)
def _sqdist(Q, X):
    out = np.empty((Q.shape[0], X.shape[0]))
    for i in range(Q.shape[0]):
        for j in range(X.shape[0]):
            s = 0.0
            for t in range(X.shape[1]):
                diff = Q[i, t] - X[j, t]
                s += diff * diff
            out[i, j] = s
    return out


def knn_predict(m: KnnModel, Q, chunk: int = 512) -> np.ndarray:
    """Mean target of the k nearest rows (Euclidean).

    Distance ties at the k-th place go to the lower training index.
    """
    Q = np.ascontiguousarray(Q, dtype=float)
    n, k = len(m.y), m.k
    out = np.empty(Q.shape[0])
    for s in range(0, Q.shape[0], chunk):
        q = Q[s:s + chunk]
        if k == n:
            out[s:s + chunk] = m.y.mean()
            continue
        D = _sqdist(q, m.X)
        part = np.argpartition(D, k - 1, axis=1)[:, :k]
        kth = np.take_along_axis(D, part, axis=1).max(axis=1)
        # rows where the k-th distance is shared beyond the chosen k need an exact ordering
        n_le = (D <= kth[:, None]).sum(axis=1)
        ambiguous = n_le > k
        pick = part
        if ambiguous.any():
            rows = np.flatnonzero(ambiguous)
            exact = np.argsort(D[rows], axis=1, kind="stable")[:, :k]
            pick = part.copy()
            pick[rows] = exact
        out[s:s + chunk] = m.y[pick].mean(axis=1)
    return out
