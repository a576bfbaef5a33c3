"""Loading, validation, EDA summaries, stratified splitting and subsampling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BinTooSmall,
    DataValidationError,
    DuplicateRows,
    MissingValue,
    ParseError,
    SubsetTooLarge,
    UnknownTarget,
)

RAW_FEATURES = (
    "MedInc",
    "HouseAge",
    "AveRooms",
    "AveBedrms",
    "Population",
    "AveOccup",
    "Latitude",
    "Longitude",
)
TARGET = "MedHouseVal"

FIXTURE_PATH = Path(__file__).parent / "data" / "fixture_200.csv"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Validated feature matrix plus target.

    ``row_ids`` holds the row numbers of the originally loaded file so that
    splits and subsets can be audited against their parent.
    """

    columns: tuple
    X: np.ndarray
    y: np.ndarray
    provenance: str = ""
    row_ids: np.ndarray = field(default=None)
    target: str = TARGET

    def __post_init__(self):
        X = np.array(self.X, dtype=float)
        y = np.array(self.y, dtype=float).ravel()
        if X.ndim != 2:
            raise DataValidationError("X must be 2-dimensional")
        cols = tuple(self.columns)
        if X.shape[1] != len(cols):
            raise DataValidationError(f"{len(cols)} column names for {X.shape[1]} columns")
        if len(set(cols)) != len(cols):
            raise DataValidationError("column names must be unique")
        if X.shape[0] != y.shape[0]:
            raise DataValidationError("X and y row counts differ")
        if X.shape[0] == 0 or X.shape[1] == 0:
            raise DataValidationError("dataset must have n > 0 rows and d >= 1 columns")
        ids = np.arange(X.shape[0]) if self.row_ids is None else np.asarray(self.row_ids, dtype=np.int64)
        for arr in (X, y, ids):
            arr.setflags(write=False)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "row_ids", ids)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.columns.index(name)]

    def take(self, idx, provenance: str | None = None) -> "Dataset":
        """Row subset; ``idx`` are positions in this dataset."""
        idx = np.asarray(idx, dtype=np.int64)
        note = provenance if provenance is not None else self.provenance
        return Dataset(self.columns, self.X[idx], self.y[idx], note, self.row_ids[idx], self.target)

    def with_columns(self, columns, X, provenance: str | None = None) -> "Dataset":
        note = provenance if provenance is not None else self.provenance
        return Dataset(columns, X, self.y, note, self.row_ids, self.target)


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    test_fraction: float
    n_bins: int
    seed: int


@dataclass(frozen=True)
class ColumnStats:
    name: str
    mean: float
    median: float
    std: float
    min: float
    max: float
    q1: float
    q3: float

    def as_dict(self):
        return dict(self.__dict__)


def load_csv(path, target_column: str = TARGET) -> Dataset:
    """Read a numeric CSV with a header row and validate it.

    Row numbers in error messages are 0-based data rows (header excluded).
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        if target_column not in header:
            raise UnknownTarget(target_column)
        if len(set(header)) != len(header):
            raise DataValidationError(f"{path}: duplicate column names in header")
        rows = []
        for r, cells in enumerate(reader):
            if not cells:
                continue
            if len(cells) != len(header):
                col = header[len(cells)] if len(cells) < len(header) else "<extra>"
                raise MissingValue(r, col)
            vals = []
            for c, cell in enumerate(cells):
                s = cell.strip()
                if s == "" or s.lower() in ("nan", "na", "null"):
                    raise MissingValue(r, header[c])
                try:
                    v = float(s)
                except ValueError:
                    raise ParseError(r, header[c], s) from None
                if not math.isfinite(v):
                    raise ParseError(r, header[c], s)
                vals.append(v)
            rows.append(vals)
    if not rows:
        raise DataValidationError(f"{path}: no data rows")
    data = np.array(rows, dtype=float)
    check_duplicates(data)
    t = header.index(target_column)
    feats = [i for i in range(len(header)) if i != t]
    return Dataset(
        tuple(header[i] for i in feats),
        data[:, feats],
        data[:, t],
        provenance=f"load_csv({path.name})",
        target=target_column,
    )


def check_duplicates(data: np.ndarray) -> None:
    """Raise DuplicateRows on any exact (bitwise) repeated row."""
    seen = {}
    dups = []
    for i, row in enumerate(np.ascontiguousarray(data)):
        key = row.tobytes()
        if key in seen:
            dups.append(i)
        else:
            seen[key] = i
    if dups:
        raise DuplicateRows(dups)


def load_fixture() -> Dataset:
    """The bundled 200-row synthetic dataset with the canonical schema."""
    return load_csv(FIXTURE_PATH, TARGET)


def _stats(name, v) -> ColumnStats:
    q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
    return ColumnStats(
        name=name,
        mean=float(np.mean(v)),
        median=float(med),
        std=float(np.std(v)),
        min=float(np.min(v)),
        max=float(np.max(v)),
        q1=float(q1),
        q3=float(q3),
    )


def summary_stats(ds: Dataset, include_target: bool = True) -> list:
    """Per-column mean, median, population std, min, max, Q1, Q3."""
    out = [_stats(c, ds.X[:, j]) for j, c in enumerate(ds.columns)]
    if include_target:
        out.append(_stats(ds.target, ds.y))
    return out


def pearson_matrix(M: np.ndarray) -> np.ndarray:
    """Column-wise Pearson correlation; zero-variance columns correlate 0."""
    M = np.asarray(M, dtype=float)
    C = M - M.mean(axis=0)
    norms = np.sqrt((C * C).sum(axis=0))
    ok = norms > 0
    R = np.zeros((M.shape[1], M.shape[1]))
    Cn = C[:, ok] / norms[ok]
    R[np.ix_(ok, ok)] = np.clip(Cn.T @ Cn, -1.0, 1.0)
    R = (R + R.T) / 2
    np.fill_diagonal(R, 1.0)
    return R


def correlation_matrix(ds: Dataset, include_target: bool = True):
    """Pearson matrix over features (and target, appended last).

    Returns ``(names, R)``.
    """
    names = list(ds.columns)
    M = ds.X
    if include_target:
        names.append(ds.target)
        M = np.column_stack([ds.X, ds.y])
    return names, pearson_matrix(M)


def _apportion(sizes, fraction):
    """Largest-remainder allocation of round(fraction * total) over groups."""
    sizes = np.asarray(sizes)
    exact = sizes * fraction
    base = np.floor(exact).astype(int)
    short = int(round(fraction * sizes.sum())) - base.sum()
    if short > 0:
        rem = exact - base
        order = np.lexsort((np.arange(len(sizes)), -rem))
        base[order[:short]] += 1
    return base


def target_bins(y: np.ndarray, n_bins: int) -> np.ndarray:
    """Bin index per row from quantile edges of ``y`` (linear interpolation)."""
    edges = np.quantile(y, np.linspace(0.0, 1.0, n_bins + 1))
    return np.searchsorted(edges[1:-1], y, side="left")


def stratified_split(ds: Dataset, test_fraction: float = 0.3, n_bins: int = 10, seed: int = 42) -> SplitPair:
    """Train/test split stratified on quantile bins of the target.

    Each bin is shuffled independently and contributes its share of test
    rows; shares are rounded by largest remainder so the test size is
    exactly ``round(test_fraction * n)``.
    """
    if not 0.0 < test_fraction < 1.0:
        raise DataValidationError("test_fraction must lie in (0, 1)")
    if n_bins < 2:
        raise DataValidationError("n_bins must be >= 2")
    bins = target_bins(ds.y, n_bins)
    sizes = np.bincount(bins, minlength=n_bins)
    for b, s in enumerate(sizes):
        if s < 2:
            raise BinTooSmall(b, int(s))
    n_test = _apportion(sizes, test_fraction)
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for b in range(n_bins):
        members = np.flatnonzero(bins == b)
        members = members[rng.permutation(len(members))]
        test_idx.append(members[: n_test[b]])
        train_idx.append(members[n_test[b]:])
    train_idx = np.sort(np.concatenate(train_idx))
    test_idx = np.sort(np.concatenate(test_idx))
    note = f"stratified_split(test_fraction={test_fraction}, n_bins={n_bins}, seed={seed})"
    return SplitPair(
        train=ds.take(train_idx, f"{ds.provenance} | train of {note}"),
        test=ds.take(test_idx, f"{ds.provenance} | test of {note}"),
        test_fraction=test_fraction,
        n_bins=n_bins,
        seed=seed,
    )


def sample_subset(ds: Dataset, n: int, seed: int = 42) -> Dataset:
    """Uniform sample of ``n`` rows without replacement."""
    if not 0 < n <= ds.n:
        raise SubsetTooLarge(f"cannot sample {n} rows from {ds.n}")
    idx = np.random.default_rng(seed).choice(ds.n, size=n, replace=False)
    return ds.take(idx, f"{ds.provenance} | sample_subset(n={n}, seed={seed})")


def eda_document(ds: Dataset, hist_bins: int = 50) -> dict:
    """Plot-ready EDA data: summaries, correlations and a few histograms."""
    stats = summary_stats(ds)
    names, R = correlation_matrix(ds)
    hists = {}
    for name in ("MedInc", "AveRooms", "Population", ds.target):
        v = ds.y if name == ds.target else (ds.column(name) if name in ds.columns else None)
        if v is None:
            continue
        counts, edges = np.histogram(v, bins=hist_bins)
        hists[name] = {"counts": counts.tolist(), "edges": edges.tolist(), "p95": float(np.quantile(v, 0.95))}
    return {
        "n_rows": ds.n,
        "columns": [s.as_dict() for s in stats],
        "correlation_names": names,
        "correlations": R.tolist(),
        "histograms": hists,
    }
