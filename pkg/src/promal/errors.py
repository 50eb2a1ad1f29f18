"""Exception and warning types raised across the package."""


class PromalError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(PromalError, ValueError):
    pass


class NotOrthogonal(PromalError, ValueError):
    pass


class NonFiniteValues(PromalError, ValueError):
    pass


class ConvergenceFailure(PromalError, RuntimeError):
    """The SVD backend did not converge."""


class SingularCovariance(PromalError, ValueError):
    pass


class NotSPD(PromalError, ValueError):
    pass


class DegenerateScaling(PromalError, RuntimeError):
    """All estimated scalings collapsed toward zero."""


class NotEnoughDimensions(PromalError, ValueError):
    pass


class ZeroDenominator(PromalError, ValueError):
    pass


class BadK(PromalError, ValueError):
    pass


class ShapeMismatch(PromalError, ValueError):
    def __init__(self, label, expected, got):
        self.label = label
        self.expected = tuple(expected)
        self.got = tuple(got)
        super().__init__(
            f"matrix {label!r} has shape {self.got}, expected {self.expected}"
        )


class ParseError(PromalError, ValueError):
    def __init__(self, path, line, column, message):
        self.path = str(path)
        self.line = line
        self.column = column
        super().__init__(f"{path}:{line}:{column}: {message}")


class DuplicateLabel(PromalError, ValueError):
    pass


class MissingArtifact(PromalError, FileNotFoundError):
    pass


class NonConvergenceWarning(UserWarning):
    """Iterative solver stopped at max_iter before meeting its tolerance."""


class DuplicatePointsWarning(UserWarning):
    pass


class NonEuclideanWarning(UserWarning):
    """Classical MDS clamped negative eigenvalues."""
