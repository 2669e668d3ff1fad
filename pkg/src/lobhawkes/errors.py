"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, NumericalError -> 3,
NonStationaryError (under --strict) -> 4.
"""


class InputError(ValueError):
    """Malformed user input: files, parameters, configuration."""


class NumericalError(RuntimeError):
    """A numerical routine failed or produced non-finite values."""


class NonStationaryError(RuntimeError):
    """Branching matrix spectral radius at or above one."""
