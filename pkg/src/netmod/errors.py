"""Exception types shared across the package."""


class NetmodError(Exception):
    """Base class for all errors raised by netmod."""


class InputError(NetmodError):
    """Malformed or inconsistent user input (files, ids, configuration)."""


class PositivityError(NetmodError):
    """Treatment positivity violated: only one treatment arm present."""
