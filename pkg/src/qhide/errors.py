"""Exception types shared across the package."""


class QhideError(Exception):
    """Base class for all package-specific errors."""


class DimensionError(QhideError, ValueError):
    """Operator shapes or Hilbert-space dimensions do not match, or a
    dimension cap would be exceeded."""


class DomainError(QhideError, ValueError):
    """An operator violates a mathematical precondition (not Hermitian,
    not positive semidefinite, state supported outside a channel's
    domain, ...)."""


class ParameterError(QhideError, ValueError):
    """Scheme or experiment parameters are out of their valid ranges."""


class DegenerateSchemeError(QhideError, ArithmeticError):
    """A sampled scheme is numerically broken (zero normalization
    operator, vanishing outcome probability on a requested branch)."""


class BudgetError(QhideError, RuntimeError):
    """A configured resource cap (outcome count, dimension budget) would
    be exceeded."""
