"""Exception hierarchy shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 2, DataError -> 3,
UpstreamError -> 4.
"""


class TrendwatchError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ConfigError(TrendwatchError):
    """Invalid configuration: bad file, unknown keys, out-of-range values."""

    exit_code = 2


class DataError(TrendwatchError):
    """Bad input data: unreadable streams, missing embeddings, bad state files."""

    exit_code = 3


class UpstreamError(TrendwatchError):
    """A remote dependency (embedding service, LLM endpoint) failed for good."""

    exit_code = 4
