class RodeoError(Exception):
    """Base class for errors raised by rodeo_schedules"""
    pass


class DomainError(RodeoError, ValueError):
    """Raised when an argument lies outside the mathematical domain of an operation"""
    pass


class UsageError(RodeoError, ValueError):
    """Raised when an operation is called with a structurally invalid argument"""
    pass


class NumericError(RodeoError, ArithmeticError):
    """Raised when a root bracket, quadrature or fixed point fails to converge"""
    pass


class DegenerateBranchError(RodeoError):
    """Raised when a post-selected branch carries no probability"""
    pass
