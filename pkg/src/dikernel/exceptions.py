"""Exception hierarchy shared by all modules."""


class DIKernelError(Exception):
    """Base class for errors raised by this package."""


class ContractError(DIKernelError, ValueError):
    """An input violates a documented precondition (shape, symmetry, range)."""


class PSDError(ContractError):
    """A matrix expected to be positive semidefinite has a negative eigenvalue."""


class RankDeficiencyError(DIKernelError, ArithmeticError):
    """A linear system has no retained eigenvalues under the rank tolerance."""


class DegenerateMapError(DIKernelError, ArithmeticError):
    """A Nystrom map has numerical rank zero."""


class GradientUndefinedError(DIKernelError, ArithmeticError):
    """The analytic gradient could not be evaluated to finite values."""


class NumericalError(DIKernelError, ArithmeticError):
    """A non-finite objective value appeared during training."""


class ConfigError(DIKernelError, ValueError):
    """An experiment or training configuration is inconsistent."""


class DataFormatError(DIKernelError, ValueError):
    """A dataset file is empty or malformed."""
