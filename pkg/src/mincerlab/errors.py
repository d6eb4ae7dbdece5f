"""Exception hierarchy shared by the estimation and CLI layers."""

from __future__ import annotations


class MincerlabError(Exception):
    """Base class for every error raised by this package."""


class InputError(MincerlabError, ValueError):
    """Malformed user input: bad CSV rows, bad config fields, unknown labels."""


class SchemaError(InputError):
    """CSV microdata that does not conform to the record schema.

    ``problems`` holds ``(row_number, column, message)`` triples; row numbers
    are 1-based data rows (the header is row 0).
    """

    def __init__(self, problems: list[tuple[int, str, str]], limit: int = 20):
        self.problems = problems
        shown = "; ".join(f"row {r}, column {c!r}: {m}" for r, c, m in problems[:limit])
        more = f" (+{len(problems) - limit} more)" if len(problems) > limit else ""
        super().__init__(f"{len(problems)} schema violation(s): {shown}{more}")


class ConfigError(InputError):
    """Invalid simulation config; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


class DomainError(MincerlabError, ValueError):
    """Argument outside the mathematical domain of a function."""


class NumericalError(MincerlabError, ArithmeticError):
    """Estimation failed for numerical reasons."""


class SingularDesignError(NumericalError):
    def __init__(self, columns: list[str]):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; offending column(s): " + ", ".join(self.columns)
        )


class InsufficientObservationsError(NumericalError):
    def __init__(self, n: int, k: int):
        self.n, self.k = n, k
        super().__init__(f"need more observations than regressors (n={n}, k={k})")


class DegenerateFitError(NumericalError):
    """A statistic is undefined because a fit is perfect or empty."""
