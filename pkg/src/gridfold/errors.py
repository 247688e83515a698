"""Exception types shared across the package."""


class GridfoldError(Exception):
    """Base class. ``field`` names the offending parameter when there is one."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class InvalidParameter(GridfoldError, ValueError):
    pass


class BudgetError(GridfoldError):
    """An exact solver was asked to exceed its size budget."""


class NoRouteError(GridfoldError):
    """Destination is not reachable in the healthy subgraph."""


class StatisticsError(GridfoldError):
    """Not enough data for a requested estimate."""


class MonoidLawViolation(GridfoldError):
    def __init__(self, message: str, witness: tuple):
        super().__init__(message)
        self.witness = witness
