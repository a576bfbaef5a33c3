"""Column-partitioned scaling with frozen, fold-local statistics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .dataset import Dataset
from .errors import DegenerateColumn, SchemaMismatch, UnknownColumn


class ScalerKind(str, Enum):
    STANDARD = "standard"
    MINMAX = "minmax"
    ROBUST = "robust"


_DEFAULT_GROUPS = {
    ScalerKind.ROBUST: ("AveRooms", "AveBedrms", "Population", "AveOccup",
                        "Room_Value_Score", "Population_Density", "Income_Density"),
    ScalerKind.MINMAX: ("Latitude", "Longitude", "HouseAge", "Location_Score", "Coastal_Proximity"),
    ScalerKind.STANDARD: ("MedInc", "Income_per_Room", "Age_Income_Interaction",
                          "Modernization_Score", "Rooms_per_Person", "Bedroom_Ratio"),
}


def default_partition() -> dict:
    """Column -> ScalerKind mapping used for the housing features."""
    return {col: kind for kind, cols in _DEFAULT_GROUPS.items() for col in cols}


def partition_from_groups(groups: dict) -> dict:
    """Build a partition from ``{kind: [columns]}``; a column may appear once."""
    part = {}
    for kind, cols in groups.items():
        kind = ScalerKind(kind)
        for c in cols:
            if c in part:
                raise ValueError(f"column {c!r} assigned to more than one scaler")
            part[c] = kind
    return part


@dataclass(frozen=True)
class ColumnScaler:
    kind: ScalerKind
    center: float  # mean, min or median
    scale: float  # population std, max - min, or IQR

    @property
    def degenerate(self) -> bool:
        return not self.scale > 0


@dataclass(frozen=True)
class FittedPreprocessor:
    """Frozen per-column statistics. There is deliberately no refit method."""

    columns: tuple
    scalers: tuple  # ColumnScaler or None per column (None = pass-through)
    fitted_on: int

    def transform(self, ds: Dataset) -> Dataset:
        return transform(self, ds)

    def as_dict(self):
        return {
            "columns": list(self.columns),
            "fitted_on": self.fitted_on,
            "scalers": [None if s is None else {"kind": s.kind.value, "center": s.center, "scale": s.scale}
                        for s in self.scalers],
        }


def _fit_column(kind: ScalerKind, v: np.ndarray) -> ColumnScaler:
    if kind is ScalerKind.STANDARD:
        return ColumnScaler(kind, float(np.mean(v)), float(np.std(v)))
    if kind is ScalerKind.MINMAX:
        lo, hi = float(np.min(v)), float(np.max(v))
        return ColumnScaler(kind, lo, hi - lo)
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    return ColumnScaler(kind, float(med), float(q3 - q1))


def fit_preprocessor(train: Dataset, partition: dict) -> FittedPreprocessor:
    """Freeze scaling statistics from ``train`` only.

    Partition entries naming columns absent from ``train`` raise
    ``UnknownColumn``; use :func:`restrict_partition` first when the
    partition is a superset (as the default one is for feature subsets).
    """
    for col in partition:
        if col not in train.columns:
            raise UnknownColumn(col)
    scalers = []
    for j, col in enumerate(train.columns):
        kind = partition.get(col)
        scalers.append(None if kind is None else _fit_column(ScalerKind(kind), train.X[:, j]))
    return FittedPreprocessor(train.columns, tuple(scalers), train.n)


def restrict_partition(partition: dict, columns) -> dict:
    cols = set(columns)
    return {c: k for c, k in partition.items() if c in cols}


def _check_schema(fp: FittedPreprocessor, ds: Dataset):
    if tuple(ds.columns) != fp.columns:
        raise SchemaMismatch(f"expected columns {fp.columns}, got {ds.columns}")


def transform_matrix(fp: FittedPreprocessor, X: np.ndarray) -> np.ndarray:
    out = np.array(X, dtype=float, copy=True)
    for j, s in enumerate(fp.scalers):
        if s is None:
            continue
        if s.degenerate:
            out[:, j] = 0.0
        else:
            out[:, j] = (out[:, j] - s.center) / s.scale
    return out


def transform(fp: FittedPreprocessor, ds: Dataset) -> Dataset:
    """Scale mapped columns with the frozen statistics.

    Degenerate statistics (zero std, range or IQR) send the column to zeros.
    """
    _check_schema(fp, ds)
    return ds.with_columns(ds.columns, transform_matrix(fp, ds.X))


def inverse_transform(fp: FittedPreprocessor, ds: Dataset) -> Dataset:
    _check_schema(fp, ds)
    out = np.array(ds.X, dtype=float, copy=True)
    for j, s in enumerate(fp.scalers):
        if s is None:
            continue
        if s.degenerate:
            raise DegenerateColumn(fp.columns[j])
        out[:, j] = out[:, j] * s.scale + s.center
    return ds.with_columns(ds.columns, out)
