"""Exception hierarchy.

The three base classes map onto CLI exit codes: configuration problems (2),
data validation problems (3) and fitting/convergence problems (4).
"""


class TubeRegressError(Exception):
    exit_code = 1


class ConfigError(TubeRegressError):
    exit_code = 2


class DataValidationError(TubeRegressError, ValueError):
    exit_code = 3


class FitError(TubeRegressError):
    exit_code = 4


# dataset
class ParseError(DataValidationError):
    def __init__(self, row, col, value=None):
        self.row, self.col = row, col
        super().__init__(f"cannot parse {value!r} as a number at row {row}, column {col!r}")


class MissingValue(DataValidationError):
    def __init__(self, row, col):
        self.row, self.col = row, col
        super().__init__(f"missing value at row {row}, column {col!r}")


class DuplicateRows(DataValidationError):
    def __init__(self, indices):
        self.indices = list(indices)
        super().__init__(f"duplicate rows at indices {self.indices[:10]}")


class UnknownTarget(DataValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"target column {name!r} not in header")


class BinTooSmall(DataValidationError):
    def __init__(self, bin_index, size):
        self.bin_index = bin_index
        super().__init__(f"stratification bin {bin_index} has {size} rows (need >= 2)")


class SubsetTooLarge(DataValidationError):
    pass


# features / preprocess
class MissingSourceColumn(DataValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"source column {name!r} required for derived features")


class UnknownFeature(DataValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown feature {name!r}")


class UnknownColumn(UnknownFeature):
    pass


class SchemaMismatch(DataValidationError):
    pass


class DegenerateColumn(DataValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"column {name!r} has degenerate scaling statistics; not invertible")


# kernel / models
class DimensionMismatch(DataValidationError):
    pass


class ZeroVariance(DataValidationError):
    pass


class NonFiniteInput(DataValidationError):
    pass


class KTooLarge(DataValidationError):
    pass


class SingularSystem(FitError):
    pass


class MaxIterationsExceeded(FitError, RuntimeWarning):
    """Issued as a warning by the SMO solver; the partial model is still returned."""


class ZeroTarget(DataValidationError):
    """``metrics`` carries the bundle of the remaining (defined) metrics."""

    metrics = None


class GridTooSmall(ConfigError):
    pass


class ConfigInvalid(ConfigError):
    pass


class MissingArtifact(ConfigError):
    def __init__(self, stage, reason="not found"):
        self.stage = stage
        super().__init__(f"artifact for stage {stage!r}: {reason}")


class StageError(FitError):
    """A fit error annotated with the fold, trial or stage it came from."""

    def __init__(self, where, cause):
        self.where = where
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", FitError.exit_code)
        super().__init__(f"{where}: {cause}")
