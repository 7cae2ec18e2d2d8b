"""Exception types shared across the package.

The CLI maps these onto process exit codes, so library code raises them
instead of bare ``ValueError`` wherever the distinction matters.
"""


class InvlpError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(InvlpError, ValueError):
    """Malformed arguments: wrong dimensions, empty data, out-of-range values."""

    exit_code = 2


class ConfigurationError(InvlpError, ValueError):
    """A valid input combination the package cannot honour (bad config, bad basis choice)."""

    exit_code = 2


class NumericalFailure(InvlpError, RuntimeError):
    """A numerical routine gave up (iteration cap, singular system)."""

    exit_code = 3


class DegenerateError(InvlpError, RuntimeError):
    """Infeasible problem or a degenerate estimate (e.g. empty reference set)."""

    exit_code = 4
