"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: InputError -> 2, ConfigError and
ContractError -> 3, NumericalError -> 4.
"""


class DistRegError(Exception):
    """Base class for all errors raised by this package."""


class InputError(DistRegError):
    """Malformed or inconsistent input data (dimensions, empty bags, bad files)."""


class ConfigError(DistRegError):
    """Invalid configuration: unknown families, non-positive parameters, bad modes."""


class ContractError(DistRegError):
    """A documented precondition between components was violated."""


class NumericalError(DistRegError):
    """A numerical routine failed (factorization breakdown, non-finite values)."""
