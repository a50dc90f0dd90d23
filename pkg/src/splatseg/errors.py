"""Exception hierarchy shared by every splatseg module.

The split matters for the command line tool: file problems map to exit
code 2, contract and configuration problems to exit code 3.
"""


class SplatsegError(Exception):
    """Base class for all library errors."""


class FormatError(SplatsegError):
    """A file does not conform to its documented on-disk layout."""


class DataError(SplatsegError):
    """A file parsed cleanly but carries invalid values."""


class ConfigError(SplatsegError):
    """A configuration value is out of range or inconsistent."""


class ContractError(SplatsegError):
    """An operation was invoked with arguments violating its preconditions."""
