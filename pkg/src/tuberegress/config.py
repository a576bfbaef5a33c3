"""Experiment configuration: a YAML file mapped onto nested dataclasses.

Example (every key optional; these are the defaults)::

    data: data/california_housing.csv
    target: MedHouseVal
    out_dir: runs/default
    n_jobs: 1
    seeds: {split: 42, subset: 42, search: 18942018, forest: 42, cv: 42}
    split: {test_fraction: 0.3, n_bins: 10}
    subset_n: 3000
    importance: {weights: [0.4, 0.3, 0.3], forest_size: 100, mi_neighbors: 3, feature_k: 12}
    scalers: {}                 # {standard|minmax|robust: [column, ...]} overrides
    search:
      C: [0.1, 1, 10, 100]
      epsilon: [0.01, 0.1, 0.5, 1.0]
      gamma: [scale, auto, 0.1, 1]
      n_iter: 20
      cv: 3
      linear: true              # also run the linear-kernel search
    final_cv: 10
    baselines: {ridge_lambda: 1.0, knn_k: 5, forest_size: 100}
    ablation: {tuned: {C: 10, epsilon: 0.5, gamma: scale}}
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigInvalid
from .preprocess import partition_from_groups

# smaller settings for the bundled 200-row fixture
FIXTURE_OVERRIDES = {"subset_n": 100, "importance.forest_size": 10, "baselines.forest_size": 10,
                     "split.n_bins": 5, "final_cv": 5}


@dataclass(frozen=True)
class Seeds:
    split: int = 42
    subset: int = 42
    search: int = 18942018
    forest: int = 42
    cv: int = 42


@dataclass(frozen=True)
class SplitConfig:
    test_fraction: float = 0.3
    n_bins: int = 10


@dataclass(frozen=True)
class ImportanceConfig:
    weights: tuple = (0.4, 0.3, 0.3)
    forest_size: int = 100
    mi_neighbors: int = 3
    feature_k: int = 12


@dataclass(frozen=True)
class SearchConfig:
    C: tuple = (0.1, 1.0, 10.0, 100.0)
    epsilon: tuple = (0.01, 0.1, 0.5, 1.0)
    gamma: tuple = ("scale", "auto", 0.1, 1.0)
    n_iter: int = 20
    cv: int = 3
    linear: bool = True


@dataclass(frozen=True)
class BaselineConfig:
    ridge_lambda: float = 1.0
    knn_k: int = 5
    forest_size: int = 100


@dataclass(frozen=True)
class AblationSettings:
    tuned: dict = field(default_factory=lambda: {"C": 10.0, "epsilon": 0.5, "gamma": "scale"})


@dataclass(frozen=True)
class ExperimentConfig:
    data: str | None = "data/california_housing.csv"
    fixture: bool = False
    target: str = "MedHouseVal"
    out_dir: str = "runs/default"
    n_jobs: int = 1
    seeds: Seeds = field(default_factory=Seeds)
    split: SplitConfig = field(default_factory=SplitConfig)
    subset_n: int = 3000
    importance: ImportanceConfig = field(default_factory=ImportanceConfig)
    scalers: dict = field(default_factory=dict)
    search: SearchConfig = field(default_factory=SearchConfig)
    final_cv: int = 10
    baselines: BaselineConfig = field(default_factory=BaselineConfig)
    ablation: AblationSettings = field(default_factory=AblationSettings)
    external_scores: str | None = None

    def as_dict(self):
        return dataclasses.asdict(self)

    def result_settings(self) -> dict:
        """Every setting that can change a result.

        ``out_dir`` and ``n_jobs`` are left out: they change where and how
        fast, never what.
        """
        d = self.as_dict()
        for k in ("out_dir", "n_jobs"):
            d.pop(k)
        return d

    def hash(self) -> str:
        blob = json.dumps(self.result_settings(), sort_keys=True, separators=(",", ":"), default=str)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


_SECTIONS = {"seeds": Seeds, "split": SplitConfig, "importance": ImportanceConfig,
             "search": SearchConfig, "baselines": BaselineConfig, "ablation": AblationSettings}


def _build(cls, raw, where):
    if not isinstance(raw, dict):
        raise ConfigInvalid(f"{where}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(raw) - names)
    if unknown:
        raise ConfigInvalid(f"{where}: unknown keys {unknown}")
    kw = {}
    for k, v in raw.items():
        if k in _SECTIONS and cls is ExperimentConfig:
            v = _build(_SECTIONS[k], v or {}, k)
        elif isinstance(v, list):
            v = tuple(v)
        kw[k] = v
    return cls(**kw)


def _check(cfg: ExperimentConfig):
    for name, v in dataclasses.asdict(cfg.seeds).items():
        if not isinstance(v, int) or isinstance(v, bool):
            raise ConfigInvalid(f"seeds.{name} must be an integer, got {v!r}")
    if not 0 < cfg.split.test_fraction < 1:
        raise ConfigInvalid("split.test_fraction must lie in (0, 1)")
    if cfg.split.n_bins < 2:
        raise ConfigInvalid("split.n_bins must be >= 2")
    if cfg.subset_n < 2:
        raise ConfigInvalid("subset_n must be >= 2")
    if cfg.importance.feature_k < 1:
        raise ConfigInvalid("importance.feature_k must be >= 1")
    w = cfg.importance.weights
    if len(w) != 3 or abs(sum(w) - 1) > 1e-9:
        raise ConfigInvalid("importance.weights must be three numbers summing to 1")
    if cfg.search.cv < 2 or cfg.final_cv < 2 or cfg.search.n_iter < 1:
        raise ConfigInvalid("cv folds must be >= 2 and n_iter >= 1")
    try:
        partition_from_groups(cfg.scalers)
    except ValueError as e:
        raise ConfigInvalid(f"scalers: {e}") from None
    if not cfg.fixture:
        if not cfg.data or not Path(cfg.data).is_file():
            raise ConfigInvalid(f"data file {cfg.data!r} not found (use --fixture for the bundled sample)")
    if cfg.external_scores and not Path(cfg.external_scores).is_file():
        raise ConfigInvalid(f"external scores file {cfg.external_scores!r} not found")


def _set_dotted(d: dict, key: str, value):
    parts = key.split(".")
    for p in parts[:-1]:
        d = d.setdefault(p, {})
    d[parts[-1]] = value


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read YAML (or start from defaults), apply dotted-key overrides, validate.

    With ``fixture`` set, :data:`FIXTURE_OVERRIDES` are applied first, so
    explicit overrides still win.
    """
    raw = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = yaml.safe_load(fh) or {}
        except OSError as e:
            raise ConfigInvalid(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ConfigInvalid(f"malformed config {path}: {e}") from e
        if not isinstance(raw, dict):
            raise ConfigInvalid("config root must be a mapping")
    overrides = dict(overrides or {})
    if overrides.get("fixture", raw.get("fixture", False)):
        for k, v in FIXTURE_OVERRIDES.items():
            _set_dotted(raw, k, v)
    for k, v in overrides.items():
        _set_dotted(raw, k, v)
    try:
        cfg = _build(ExperimentConfig, raw, "config")
    except TypeError as e:
        raise ConfigInvalid(str(e)) from e
    _check(cfg)
    return cfg
