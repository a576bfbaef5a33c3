"""Cumulative four-stage ablation: scaling, then feature engineering, then tuning.

=====  =========  =============  ========
stage  scaling    features       params
=====  =========  =============  ========
A      none       raw 8          default
B      partition  raw 8          default
C      partition  engineered k   default
D      partition  engineered k   tuned
=====  =========  =============  ========
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

from .dataset import RAW_FEATURES, Dataset, sample_subset
from .errors import StageError, TubeRegressError
from .evaluation import r2_score
from .features import select_features
from .kernel import KernelSpec
from .pipeline import Pipeline, SvrEstimator
from .preprocess import default_partition
from .svr import SvrParams

STAGE_IDS = ("A", "B", "C", "D")
DEFAULT_PARAMS = SvrParams(C=1.0, epsilon=0.1, kernel=KernelSpec("rbf", "scale"))
TUNED_PARAMS = SvrParams(C=10.0, epsilon=0.5, kernel=KernelSpec("rbf", "scale"))


@dataclass(frozen=True)
class AblationConfig:
    engineered: tuple  # selected feature names for stages C and D
    raw: tuple = RAW_FEATURES
    partition: dict = field(default_factory=default_partition)
    default_params: SvrParams = DEFAULT_PARAMS
    tuned_params: SvrParams = TUNED_PARAMS
    subset_n: int = 3000
    subset_seed: int = 42

    def stages(self):
        """(id, scaled, feature names, params) for each stage."""
        return (
            ("A", False, tuple(self.raw), self.default_params),
            ("B", True, tuple(self.raw), self.default_params),
            ("C", True, tuple(self.engineered), self.default_params),
            ("D", True, tuple(self.engineered), self.tuned_params),
        )


@dataclass(frozen=True)
class StageResult:
    stage: str
    scaled: bool
    features: tuple
    params: SvrParams
    r2: float
    train_rows: int

    def as_dict(self):
        return {"stage": self.stage, "scaling": self.scaled, "features": list(self.features),
                "C": self.params.C, "epsilon": self.params.epsilon, "gamma": self.params.kernel.gamma,
                "r2": self.r2, "train_rows": self.train_rows}


@dataclass(frozen=True)
class AblationResult:
    stages: tuple  # StageResult for A, B, C, D

    def r2(self, stage: str) -> float:
        return self.stages[STAGE_IDS.index(stage)].r2

    @property
    def deltas(self) -> dict:
        a, b, c, d = (s.r2 for s in self.stages)
        return {"B-A": b - a, "C-B": c - b, "D-C": d - c, "D-A": d - a}


def run_ablation(train: Dataset, test: Dataset, config: AblationConfig) -> AblationResult:
    """Fit each stage on the same training subset and score R² on ``test``.

    ``train`` and ``test`` must carry every column the stages select. The
    subset is drawn once, so all stages see byte-identical rows.
    """
    sub = sample_subset(train, config.subset_n, config.subset_seed) if config.subset_n < train.n else train
    out = []
    for sid, scaled, feats, params in config.stages():
        try:
            tr, te = select_features(sub, feats), select_features(test, feats)
            pipe = Pipeline(SvrEstimator(params), config.partition if scaled else {})
            r2 = r2_score(te.y, pipe.fit(tr).predict(te))
        except TubeRegressError as e:
            raise StageError(f"stage {sid}", e) from e
        out.append(StageResult(sid, scaled, feats, params, r2, tr.n))
    return AblationResult(tuple(out))


def ablation_report(r: AblationResult) -> dict:
    """Stage scores, deltas and each step's share of the total D - A change.

    Shares are None when the total change is exactly zero.
    """
    d = r.deltas
    total = d["D-A"]
    if total == 0:
        shares = {"scaling": None, "features": None, "tuning": None}
    else:
        shares = {"scaling": d["B-A"] / total, "features": d["C-B"] / total, "tuning": d["D-C"] / total}
    return {"stages": [s.as_dict() for s in r.stages], "deltas": d, "shares": shares}


def ablation_csv(r: AblationResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "scaling", "features", "params", "r2", "delta"])
    prev = None
    for s in r.stages:
        params = "tuned" if s.stage == "D" else "default"
        delta = "" if prev is None else repr(s.r2 - prev)
        w.writerow([s.stage, "partition" if s.scaled else "none", len(s.features), params, repr(s.r2), delta])
        prev = s.r2
    return buf.getvalue()
