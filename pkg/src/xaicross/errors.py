"""Exception types shared across the package.

Everything derives from ``XaiCrossError`` (itself a ``ValueError``) so callers
can catch broadly or per condition.
"""


class XaiCrossError(ValueError):
    """Base class for all errors raised by this package."""


class SchemaError(XaiCrossError):
    """Invalid feature schema or schema config file."""


class HeaderMismatchError(XaiCrossError):
    """CSV header does not match the schema columns."""

    def __init__(self, missing, extra):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        parts = []
        if self.missing:
            parts.append("missing columns: " + ", ".join(self.missing))
        if self.extra:
            parts.append("unexpected columns: " + ", ".join(self.extra))
        super().__init__("; ".join(parts) or "header mismatch")


class MalformedRowError(XaiCrossError):
    """CSV row with the wrong number of cells."""


class UnknownCategoryError(XaiCrossError):
    """Categorical cell value not declared in the schema."""

    def __init__(self, column, value):
        self.column = column
        self.value = value
        super().__init__(f"unknown category {value!r} in column {column!r}")


class MissingValueError(XaiCrossError):
    """Operation requires a complete table but missing cells remain."""


class DegenerateLabelsError(XaiCrossError):
    """Labels contain only one class."""


class TooFewRowsError(XaiCrossError):
    """Not enough rows for the requested operation."""


class DimensionMismatchError(XaiCrossError):
    """Vector or matrix width does not match the model's feature count."""


class NonFiniteError(XaiCrossError):
    """NaN or infinite values where finite numbers are required."""


class TooManyFeaturesError(XaiCrossError):
    """Exact Shapley enumeration requested beyond the feature cap."""


class VocabularyMismatchError(XaiCrossError):
    """Two attributions do not share the same feature vocabulary."""


class TooFewPairsError(XaiCrossError):
    """Rank correlation needs at least three pairs."""


class EmptyTrainingStatsError(XaiCrossError):
    """LIME training statistics built from no rows or covering no features."""


class SingularSystemError(XaiCrossError):
    """Weighted least squares system could not be solved."""


class CorruptModelError(XaiCrossError):
    """Model payload is truncated or structurally invalid."""


class ModelVersionError(XaiCrossError):
    """Model payload was written by an unsupported format version."""


class ConfigError(XaiCrossError):
    """Invalid run configuration file or CLI arguments."""
