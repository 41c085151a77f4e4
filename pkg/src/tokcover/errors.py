"""Exception types shared across the package."""


class TokcoverError(Exception):
    """Base class for all package-specific errors."""


class DegenerateRowError(TokcoverError):
    """A row's L2 norm fell below the degeneracy threshold."""

    def __init__(self, index, norm):
        self.index = index
        self.norm = norm
        super().__init__(f"row {index} has norm {norm:.3e}, below threshold")


class DimMismatchError(TokcoverError):
    pass


class NonPositiveTauError(TokcoverError):
    pass


class BadSpansError(TokcoverError):
    pass


class IndexOutOfRangeError(TokcoverError):
    pass


class SourceCountMismatchError(TokcoverError):
    pass


class InstanceTooLargeError(TokcoverError):
    pass


class BudgetExceedsTokensError(TokcoverError):
    pass


class ZeroBaselineError(TokcoverError):
    pass


class NotMonotoneError(TokcoverError):
    """The calibrated vision-vision objective was not monotone on the search interval."""


class NotBracketedWarning(UserWarning):
    """The bisection gap had the same sign at both interval endpoints."""


class DumpError(TokcoverError):
    """Base class for embedding-dump file errors."""


class BadMagicError(DumpError):
    pass


class BadVersionError(DumpError):
    pass


class TruncatedFileError(DumpError):
    pass


class InvariantViolationError(DumpError):
    def __init__(self, detail):
        self.detail = detail
        super().__init__(detail)
