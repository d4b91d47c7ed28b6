"""Exception hierarchy shared across the package.

The CLI maps these onto process exit codes: configuration/input problems
exit with 2, numerical failures with 3, and OS-level I/O errors with 4.
"""


class VolroughError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(VolroughError):
    """Invalid configuration, parameters, or input data."""


class ChainFormatError(ConfigError):
    """Malformed option-chain file (schema, ordering, or convention)."""


class NumericalError(VolroughError):
    """A numerical routine failed to converge or left its valid domain."""
