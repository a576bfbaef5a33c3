"""Regression metrics and k-fold cross-validation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import DimensionMismatch, KTooLarge, StageError, TubeRegressError, ZeroTarget

Z95 = 1.96


@dataclass(frozen=True)
class MetricsBundle:
    r2: float
    rmse: float
    mae: float
    mape_percent: float | None  # None when some target is zero
    explained_variance: float

    def as_dict(self):
        return {"r2": self.r2, "rmse": self.rmse, "mae": self.mae,
                "mape_percent": self.mape_percent, "explained_variance": self.explained_variance}


def r2_score(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    res = y - np.asarray(yhat, dtype=float)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(res**2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else 0.0
    return 1.0 - ss_res / ss_tot


def mape(y, yhat) -> float:
    y = np.asarray(y, dtype=float)
    if np.any(y == 0):
        raise ZeroTarget("MAPE undefined: target contains zeros")
    return float(100.0 * np.mean(np.abs(y - np.asarray(yhat, dtype=float)) / np.abs(y)))


def compute_metrics(y, yhat, strict: bool = False) -> MetricsBundle:
    """R², RMSE, MAE, MAPE (percent) and explained variance.

    If any target is zero MAPE is undefined and ``mape_percent`` is None.
    With ``strict`` a :class:`ZeroTarget` is raised instead; its ``metrics``
    attribute still holds the other values.
    """
    y = np.asarray(y, dtype=float).ravel()
    yhat = np.asarray(yhat, dtype=float).ravel()
    if y.shape != yhat.shape:
        raise DimensionMismatch(f"{y.shape[0]} targets vs {yhat.shape[0]} predictions")
    if len(y) < 2:
        raise ValueError("need at least two observations")
    res = y - yhat
    var_y = float(np.var(y))
    zero = bool(np.any(y == 0))
    bundle = MetricsBundle(
        r2=r2_score(y, yhat),
        rmse=math.sqrt(float(np.mean(res**2))),
        mae=float(np.mean(np.abs(res))),
        mape_percent=None if zero else mape(y, yhat),
        explained_variance=(1.0 - float(np.var(res)) / var_y) if var_y > 0 else (1.0 if np.var(res) == 0 else 0.0),
    )
    if zero and strict:
        err = ZeroTarget("MAPE undefined: target contains zeros")
        err.metrics = bundle
        raise err
    return bundle


def kfold_indices(n: int, k: int, seed: int = 42) -> list:
    """Shuffle ``range(n)`` and cut it into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise KTooLarge(f"k={k} folds for n={n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


@dataclass(frozen=True)
class CvResult:
    fold_scores: tuple
    mean: float
    std: float  # population
    ci_low: float
    ci_high: float

    @classmethod
    def from_scores(cls, scores) -> "CvResult":
        s = np.asarray(scores, dtype=float)
        if len(s) < 2:
            raise ValueError("need at least two fold scores")
        mean, std = float(s.mean()), float(s.std())
        return cls(tuple(float(v) for v in s), mean, std, mean - Z95 * std, mean + Z95 * std)

    def as_dict(self):
        return {"fold_scores": list(self.fold_scores), "mean": self.mean, "std": self.std,
                "ci_low": self.ci_low, "ci_high": self.ci_high}


def fold_train_indices(n: int, folds: list, i: int) -> np.ndarray:
    mask = np.ones(n, dtype=bool)
    mask[folds[i]] = False
    return np.flatnonzero(mask)


def cross_validate(pipeline, ds: Dataset, k: int = 10, seed: int = 42, return_fitted: bool = False):
    """Score ``pipeline`` by R² on each of ``k`` shuffled folds.

    The preprocessor and the model are both fitted on the training part of
    the fold. A failing fold is re-raised as :class:`StageError` naming it.
    Returns a :class:`CvResult`, plus the fitted pipelines when requested.
    """
    folds = kfold_indices(ds.n, k, seed)
    scores, fitted = [], []
    for i, val in enumerate(folds):
        try:
            fp = pipeline.fit(ds.take(fold_train_indices(ds.n, folds, i)))
            held = ds.take(val)
            scores.append(r2_score(held.y, fp.predict(held)))
        except TubeRegressError as e:
            raise StageError(f"fold {i}", e) from e
        if return_fitted:
            fitted.append(fp)
    res = CvResult.from_scores(scores)
    return (res, fitted) if return_fitted else res
