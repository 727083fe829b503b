"""Shared exception types."""


class InputError(ValueError):
    """Invalid user-supplied data or configuration (CLI exit code 2)."""


class NumericalError(ArithmeticError):
    """A computation produced non-finite or unusable values (CLI exit code 4)."""
