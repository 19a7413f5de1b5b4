"""Exception types shared across the package."""


class UkdError(Exception):
    """Base class for every error raised by this package."""


class ShapeError(UkdError, ValueError):
    """Operand shapes are incompatible."""


class ParameterError(UkdError, ValueError):
    """A hyperparameter or argument is outside its valid range."""


class SpecError(UkdError, ValueError):
    """A layer, dataset, or training specification is invalid."""


class DistributionError(UkdError, ValueError):
    """An array that must be a (log-)probability distribution is not one."""


class LabelError(UkdError, ValueError):
    """A class label lies outside [0, num_classes)."""


class DataError(UkdError, ValueError):
    """A dataset or split cannot be used (e.g. empty)."""


class ContractError(UkdError, RuntimeError):
    """An API precondition was violated (missing grads, non-scalar loss, ...)."""


class FormatError(UkdError, ValueError):
    """A binary file does not match its expected layout."""


class NumericError(UkdError, ArithmeticError):
    """A computation produced NaN or Inf."""
