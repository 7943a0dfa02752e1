"""Exception taxonomy.

``ConfigError`` covers bad user input (files, keys, parameter values) and
maps to exit code 2 / HTTP 400.  ``NumericalError`` covers convergence
failures in quadrature or oracle evaluation and maps to exit code 3 /
HTTP 500.
"""


class JackvarError(Exception):
    """Base class for library errors."""


class ConfigError(JackvarError, ValueError):
    """Invalid input data, configuration, or lookup key."""


class NumericalError(JackvarError, RuntimeError):
    """A numerical routine failed to converge or produced invalid output."""
