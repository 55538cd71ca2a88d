"""Exception hierarchy shared by every module of the package."""


class SphereGOFError(Exception):
    """Base class for all package errors."""


class ZeroVector(SphereGOFError, ValueError):
    pass


class OutOfRange(SphereGOFError, ValueError):
    pass


class NotUnitNorm(SphereGOFError, ValueError):
    pass


class DimensionMismatch(SphereGOFError, ValueError):
    pass


class UnsupportedDimension(SphereGOFError, ValueError):
    pass


class InvalidSpec(SphereGOFError, ValueError):
    """A distribution or kernel was constructed with parameters outside its domain."""


class InvalidConfig(SphereGOFError, ValueError):
    pass


class EmptyInput(SphereGOFError, ValueError):
    pass


class EstimationError(SphereGOFError):
    """Base class for estimator failures."""


class DegenerateMean(EstimationError):
    """The sample mean vector is (numerically) zero, so no mean direction exists."""


class RankDeficient(EstimationError):
    pass


class NoConvergence(EstimationError):
    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class FitFailed(SphereGOFError):
    """Too many parametric-bootstrap replicates failed to produce a usable fit."""


class ParseError(SphereGOFError, ValueError):
    def __init__(self, message, row=None, column=None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class EmptyAfterFilter(SphereGOFError, ValueError):
    pass
