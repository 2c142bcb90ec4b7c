"""Exception hierarchy shared across the toolkit."""


class KZBenchError(Exception):
    """Base class for toolkit errors."""


class ResourceLimitError(KZBenchError):
    """A requested computation exceeds a documented size limit."""


class ConfigError(KZBenchError, ValueError):
    """An experiment configuration failed validation."""


class UndefinedObservableError(KZBenchError, ValueError):
    """An observable is undefined for the given data (e.g. zero defects)."""
