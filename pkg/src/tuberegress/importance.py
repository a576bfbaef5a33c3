"""Ensemble feature importance: mutual information, |Pearson r| and forest impurity.

Each scorer is min-max normalised across features before weighting.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import digamma

from .dataset import Dataset, pearson_matrix
from .errors import KTooLarge
from .trees import TreeParams, forest_fit, impurity_importance

DEFAULT_WEIGHTS = (0.4, 0.3, 0.3)


def _unit_scale(v):
    sd = np.std(v)
    return v / sd if sd > 0 else v.copy()


def _jitter(v, noise):
    return v + 1e-10 * max(1.0, float(np.mean(np.abs(v)))) * noise


def _count_within(sorted_v, v, r):
    """Number of points with |v_j - v_i| <= r_i (self included)."""
    return np.searchsorted(sorted_v, v + r, side="right") - np.searchsorted(sorted_v, v - r, side="left")


def _ksg(x, y, k):
    n = len(x)
    xy = np.column_stack([x, y])
    dist, _ = cKDTree(xy).query(xy, k=k + 1, p=np.inf)
    # strict inequality: shrink the radius by one ulp
    r = np.nextafter(dist[:, -1], 0)
    nx = _count_within(np.sort(x), x, r) - 1
    ny = _count_within(np.sort(y), y, r) - 1
    mi = digamma(n) + digamma(k) - np.mean(digamma(nx + 1)) - np.mean(digamma(ny + 1))
    return max(0.0, float(mi))


def mutual_information(x, y, k: int = 3, seed: int = 0) -> float:
    """Kraskov (KSG, first variant) k-NN estimate of I(x; y) in nats.

    Both variables are scaled to unit variance and receive a seeded jitter
    of relative size 1e-10 so that repeated values do not tie. Negative
    estimates are clamped to zero.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if not len(x) > k >= 1:
        raise ValueError("need n > k >= 1")
    rng = np.random.default_rng(seed)
    nx, ny = rng.standard_normal((2, len(x)))
    return _ksg(_jitter(_unit_scale(x), nx), _jitter(_unit_scale(y), ny), k)


def mutual_information_columns(X, y, k: int = 3, seed: int = 0) -> np.ndarray:
    """MI of each column with ``y``.

    Every column gets the same jitter draw, so identical columns score
    identically.
    """
    X = np.asarray(X, dtype=float)
    rng = np.random.default_rng(seed)
    nx, ny = rng.standard_normal((2, X.shape[0]))
    yj = _jitter(_unit_scale(np.asarray(y, dtype=float)), ny)
    return np.array([_ksg(_jitter(_unit_scale(X[:, j]), nx), yj, k) for j in range(X.shape[1])])


def minmax_normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    lo, hi = v.min(), v.max()
    if not hi > lo:
        return np.zeros_like(v)
    return (v - lo) / (hi - lo)


@dataclass(frozen=True, eq=False)
class ImportanceReport:
    features: tuple
    mi: np.ndarray
    pearson_abs: np.ndarray
    rf: np.ndarray
    weights: tuple = DEFAULT_WEIGHTS

    @property
    def mi_norm(self):
        return minmax_normalize(self.mi)

    @property
    def pearson_norm(self):
        return minmax_normalize(self.pearson_abs)

    @property
    def rf_norm(self):
        return minmax_normalize(self.rf)

    @property
    def ensemble(self) -> np.ndarray:
        wm, wp, wr = self.weights
        return wm * self.mi_norm + wp * self.pearson_norm + wr * self.rf_norm

    @property
    def order(self) -> np.ndarray:
        """Feature positions by descending ensemble score, ties by column order."""
        e = self.ensemble
        return np.lexsort((np.arange(len(e)), -e))

    @property
    def rank(self) -> np.ndarray:
        r = np.empty(len(self.features), dtype=int)
        r[self.order] = np.arange(1, len(self.features) + 1)
        return r

    def rows(self):
        e, rank = self.ensemble, self.rank
        mn, pn, rn = self.mi_norm, self.pearson_norm, self.rf_norm
        out = []
        for i in self.order:
            out.append({
                "feature": self.features[i],
                "mi": float(self.mi[i]),
                "pearson": float(self.pearson_abs[i]),
                "rf": float(self.rf[i]),
                "mi_norm": float(mn[i]),
                "pearson_norm": float(pn[i]),
                "rf_norm": float(rn[i]),
                "ensemble": float(e[i]),
                "rank": int(rank[i]),
            })
        return out

    def to_dict(self):
        return {"weights": list(self.weights), "features": self.rows()}

    @classmethod
    def from_dict(cls, d):
        rows = sorted(d["features"], key=lambda r: r["rank"])
        return cls(
            tuple(r["feature"] for r in rows),
            np.array([r["mi"] for r in rows]),
            np.array([r["pearson"] for r in rows]),
            np.array([r["rf"] for r in rows]),
            tuple(d["weights"]),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature", "mi", "pearson", "rf", "ensemble", "rank"])
        for r in self.rows():
            w.writerow([r["feature"], repr(r["mi"]), repr(r["pearson"]), repr(r["rf"]), repr(r["ensemble"]), r["rank"]])
        return buf.getvalue()


def _share_duplicates(X, scores):
    """Pool scores of bitwise-identical columns and split them evenly."""
    scores = scores.copy()
    keys = {}
    for j in range(X.shape[1]):
        keys.setdefault(np.ascontiguousarray(X[:, j]).tobytes(), []).append(j)
    for group in keys.values():
        if len(group) > 1:
            scores[group] = scores[group].sum() / len(group)
    return scores


def ensemble_scores(ds: Dataset, weights=DEFAULT_WEIGHTS, forest_size: int = 100, seed: int = 42,
                    k: int = 3, n_jobs: int = 1) -> ImportanceReport:
    """Score every column of ``ds`` against its target.

    Forest importances of exactly duplicated columns are shared equally,
    since a tree cannot tell such columns apart and would otherwise credit
    whichever comes first.
    """
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    mi = mutual_information_columns(ds.X, ds.y, k=k, seed=seed)
    R = pearson_matrix(np.column_stack([ds.X, ds.y]))
    pearson = np.abs(R[:-1, -1])
    forest = forest_fit(ds.X, ds.y, forest_size, TreeParams(seed=seed), n_jobs=n_jobs)
    rf = _share_duplicates(ds.X, impurity_importance(forest))
    return ImportanceReport(tuple(ds.columns), mi, pearson, rf, tuple(weights))


def top_k(report: ImportanceReport, k: int) -> list:
    if not 1 <= k <= len(report.features):
        raise KTooLarge(f"k={k} with {len(report.features)} features")
    return [report.features[i] for i in report.order[:k]]
