"""Exception hierarchy shared by all sisio modules."""

from __future__ import annotations


class SisioError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SisioError, ValueError):
    pass


class DimensionError(SisioError, ValueError):
    pass


class EmptyIntersectionError(SisioError):
    """Raised when two boxes do not overlap; ``index`` is the first offending coordinate."""

    def __init__(self, index: int, message: str | None = None):
        self.index = index
        super().__init__(message or f"empty intersection at coordinate {index}")


class ExprSyntaxError(SisioError, ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"{message} (at position {position})")


class EstimationError(SisioError):
    """Jacobian-bound estimation hit a non-finite partial derivative."""

    def __init__(self, row: int, col: int, point):
        self.row = row
        self.col = col
        self.point = tuple(float(v) for v in point)
        super().__init__(
            f"non-finite partial d h_{row + 1} / d x_{col + 1} at {self.point}"
        )


class InfeasibleError(SisioError):
    """The residual polytope is empty."""


class RankDeficiencyError(SisioError, ValueError):
    pass


class DomainViolationError(SisioError):
    pass


class ModelInconsistencyError(SisioError):
    """Fused input bounds inverted: the measurement contradicts the model."""


class SimulationDivergedError(SisioError):
    pass
