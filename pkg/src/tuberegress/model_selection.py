"""Randomized hyperparameter search over a finite SVR grid with inner k-fold CV."""

from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .errors import GridTooSmall, StageError, TubeRegressError
from .evaluation import fold_train_indices, kfold_indices, r2_score
from .kernel import KernelSpec
from .pipeline import FittedPipeline, Pipeline, SvrEstimator
from .svr import SvrParams


@dataclass(frozen=True)
class ParamSpace:
    C_choices: tuple = (0.1, 1.0, 10.0, 100.0)
    epsilon_choices: tuple = (0.01, 0.1, 0.5, 1.0)
    gamma_choices: tuple = ("scale", "auto", 0.1, 1.0)
    kernel: str = "rbf"
    coef0: float = 0.0
    degree: int = 3
    tol: float = 1e-3

    def __post_init__(self):
        if not (self.C_choices and self.epsilon_choices and self.gamma_choices):
            raise ValueError("every choice list must be non-empty")

    def grid(self) -> list:
        """All candidates, C-major, in the order the choices are listed."""
        return [
            SvrParams(C=float(c), epsilon=float(e), kernel=KernelSpec(self.kernel, g, self.coef0, self.degree),
                      tol=self.tol)
            for c, e, g in itertools.product(self.C_choices, self.epsilon_choices, self.gamma_choices)
        ]

    def as_dict(self):
        return {"C_choices": list(self.C_choices), "epsilon_choices": list(self.epsilon_choices),
                "gamma_choices": list(self.gamma_choices), "kernel": self.kernel,
                "coef0": self.coef0, "degree": self.degree, "tol": self.tol}


@dataclass(frozen=True)
class Trial:
    index: int
    grid_index: int
    seed: int
    params: SvrParams
    fold_scores: tuple
    wall_time: float = field(default=0.0, compare=False)

    @property
    def mean_score(self) -> float:
        return float(np.mean(self.fold_scores))

    def as_dict(self):
        k = self.params.kernel
        return {"index": self.index, "grid_index": self.grid_index, "seed": self.seed,
                "C": self.params.C, "epsilon": self.params.epsilon, "gamma": k.gamma, "kernel": k.kind,
                "fold_scores": list(self.fold_scores), "mean_score": self.mean_score}


def _gamma_key(g):
    if g == "scale":
        return (0, 0.0)
    if g == "auto":
        return (1, 0.0)
    return (2, float(g))


def _trial_key(t: Trial):
    return (-t.mean_score, t.params.C, t.params.epsilon, _gamma_key(t.params.kernel.gamma))


def tie_break(trials) -> Trial:
    """Highest mean score; ties go to lower C, then lower epsilon, then gamma
    in the order scale, auto, numeric ascending."""
    trials = list(trials)
    if not trials:
        raise ValueError("no trials")
    return min(trials, key=_trial_key)


@dataclass(frozen=True, eq=False)
class SearchResult:
    trials: tuple
    best: Trial
    total_fits: int
    n_iter: int
    cv: int
    seed: int
    space: ParamSpace
    refit: FittedPipeline | None = None

    @property
    def best_params(self) -> SvrParams:
        return self.best.params

    @property
    def best_mean_score(self) -> float:
        return self.best.mean_score

    def as_dict(self):
        """Deterministic search log (wall times live in :meth:`timings`)."""
        return {"n_iter": self.n_iter, "cv": self.cv, "seed": self.seed, "total_fits": self.total_fits,
                "refit_fits": int(self.refit is not None),
                "space": self.space.as_dict(), "trials": [t.as_dict() for t in self.trials],
                "best": self.best.as_dict()}

    def timings(self):
        return {"trials": [{"index": t.index, "wall_time": t.wall_time} for t in self.trials]}


def trial_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def randomized_search(ds: Dataset, space: ParamSpace = ParamSpace(), n_iter: int = 20, cv: int = 3,
                      seed: int = 18942018, partition: dict | None = None, refit: bool = True,
                      n_jobs: int = 1) -> SearchResult:
    """Sample ``n_iter`` grid cells without replacement and score each by
    mean R² over ``cv`` folds of ``ds``.

    Every trial sees the same folds. The winner (see :func:`tie_break`) is
    refitted on all of ``ds``. Trials are independent, so ``n_jobs`` only
    changes the wall time, never the result.
    """
    grid = space.grid()
    if n_iter > len(grid):
        raise GridTooSmall(f"n_iter={n_iter} exceeds grid size {len(grid)}")
    if n_iter < 1 or cv < 2:
        raise ValueError("n_iter >= 1 and cv >= 2 required")
    rng = np.random.default_rng(seed)
    picks = rng.choice(len(grid), size=n_iter, replace=False)
    folds = kfold_indices(ds.n, cv, seed)
    parts = [(ds.take(fold_train_indices(ds.n, folds, i)), ds.take(f)) for i, f in enumerate(folds)]
    partition = partition or {}

    def run(i):
        params = grid[picks[i]]
        pipe = Pipeline(SvrEstimator(params), partition)
        t0 = time.perf_counter()
        scores = []
        for j, (tr, va) in enumerate(parts):
            try:
                scores.append(r2_score(va.y, pipe.fit(tr).predict(va)))
            except TubeRegressError as e:
                raise StageError(f"trial {i} fold {j}", e) from e
        return Trial(i, int(picks[i]), trial_seed(seed, i), params, tuple(scores), time.perf_counter() - t0)

    if n_jobs == 1:
        trials = [run(i) for i in range(n_iter)]
    else:
        with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as ex:
            trials = list(ex.map(run, range(n_iter)))
    best = tie_break(trials)
    fitted = Pipeline(SvrEstimator(best.params), partition).fit(ds) if refit else None
    return SearchResult(tuple(trials), best, n_iter * cv, n_iter, cv, seed, space, fitted)
