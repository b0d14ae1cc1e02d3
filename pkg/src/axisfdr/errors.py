"""Exception hierarchy.

The CLI maps ``DataError`` to exit code 3 and ``NumericalError`` to exit
code 4; everything else that escapes is a bug.
"""


class AxisFdrError(Exception):
    pass


class DomainError(AxisFdrError, ValueError):
    """An argument lies outside the domain of the operation."""


class DataError(AxisFdrError):
    """Input files or volumes are malformed or mutually inconsistent."""


class NumericalError(AxisFdrError):
    pass


class DegenerateMeanError(NumericalError):
    """The top eigenvalue of a scatter matrix is (numerically) repeated.

    The mean axis is not identifiable; both eigenvalues are kept so the
    caller can decide what to do.
    """

    def __init__(self, top, second):
        self.top = float(top)
        self.second = float(second)
        super().__init__(
            f"degenerate mean axis: top eigenvalues {self.top!r} and {self.second!r}"
        )


class NonConcentratedError(NumericalError):
    """gamma <= 1/3: the concentration equation has no solution."""


class DegenerateStatisticError(NumericalError):
    """Intragroup dispersion is zero, so the F ratio is undefined."""


class FitError(NumericalError):
    """Empirical-null regression failed; ``diagnostics`` holds the details."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})
