"""Preprocessor + estimator pairs that are always fitted on training rows only.

Estimators are small immutable specs with a ``fit(X, y)`` method returning a
model that has ``predict(X)``. A :class:`Pipeline` is itself immutable, so the
same object can be fitted repeatedly (per fold, per trial) without sharing
state between fits.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .baselines import knn_fit, ols_fit, ridge_fit
from .dataset import Dataset
from .preprocess import FittedPreprocessor, fit_preprocessor, restrict_partition
from .svr import SvrParams, svr_fit
from .trees import TreeParams, forest_fit, tree_fit


@dataclass(frozen=True)
class SvrEstimator:
    params: SvrParams = field(default_factory=SvrParams)

    def fit(self, X, y):
        return svr_fit(X, y, self.params)


@dataclass(frozen=True)
class OlsEstimator:
    def fit(self, X, y):
        return ols_fit(X, y)


@dataclass(frozen=True)
class RidgeEstimator:
    lam: float = 1.0

    def fit(self, X, y):
        return ridge_fit(X, y, self.lam)


@dataclass(frozen=True)
class KnnEstimator:
    k: int = 5

    def fit(self, X, y):
        return knn_fit(X, y, self.k)


@dataclass(frozen=True)
class TreeEstimator:
    params: TreeParams = field(default_factory=TreeParams)

    def fit(self, X, y):
        return tree_fit(X, y, self.params)


@dataclass(frozen=True)
class ForestEstimator:
    n_estimators: int = 100
    params: TreeParams = field(default_factory=TreeParams)
    n_jobs: int = 1

    def fit(self, X, y):
        return forest_fit(X, y, self.n_estimators, self.params, n_jobs=self.n_jobs)


@dataclass(frozen=True)
class FittedPipeline:
    preprocessor: FittedPreprocessor
    model: object

    def predict(self, ds: Dataset) -> np.ndarray:
        return self.model.predict(self.preprocessor.transform(ds).X)


@dataclass(frozen=True)
class Pipeline:
    """``partition`` maps column -> ScalerKind; unmapped columns pass through.

    Entries for columns the data does not have are dropped at fit time, so the
    full housing partition can be shared across feature subsets.
    """

    estimator: object
    partition: dict = field(default_factory=dict)

    def fit(self, train: Dataset) -> FittedPipeline:
        fp = fit_preprocessor(train, restrict_partition(self.partition, train.columns))
        return FittedPipeline(fp, self.estimator.fit(fp.transform(train).X, train.y))
