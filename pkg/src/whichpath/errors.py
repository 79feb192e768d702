"""Exception hierarchy. Each class maps onto one CLI exit code."""


class WhichPathError(Exception):
    exit_code = 1


class ConfigError(WhichPathError, ValueError):
    """Bad parameters, mismatched factors, invalid scenario files."""

    exit_code = 1


class ResourceError(WhichPathError):
    """A requested Hilbert space exceeds the dense-representation cap."""

    exit_code = 1


class QueryError(WhichPathError, KeyError):
    exit_code = 1


class UsageError(WhichPathError):
    """Operation applied out of order (e.g. measuring one party twice)."""

    exit_code = 1


class InvariantError(WhichPathError):
    exit_code = 2
