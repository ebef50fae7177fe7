"""Exception types shared across the package."""

from __future__ import annotations


class JobcorpusError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(JobcorpusError, ValueError):
    """A configuration value is out of range or names an unknown registry key."""


class LoadError(JobcorpusError):
    """A data file failed to parse.  Carries the offending location."""

    def __init__(self, message: str, *, path=None, line: int | None = None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.path = path
        self.line = line


class InvalidCode(JobcorpusError, ValueError):
    """A category code string does not follow the dash-separated numeric form."""


class TaxonomyError(LoadError):
    """The taxonomy file violates hierarchy closure or contains bad nodes."""


class UnknownCodeError(JobcorpusError, KeyError):
    """A lookup referenced a category code the taxonomy does not contain."""


class DomainError(JobcorpusError, ValueError):
    """An operation was called with a value outside its mathematical domain."""


class StateError(JobcorpusError):
    """A pipeline transition was attempted from a state that forbids it."""


class TrainingError(JobcorpusError):
    """Classifier training could not produce a model from the given data."""


class OracleUnavailable(JobcorpusError):
    """The configured judgement source failed to answer."""


class GridAborted(JobcorpusError):
    """A grid run stopped early; carries the rows completed so far."""

    def __init__(self, message: str, partial_rows):
        super().__init__(message)
        self.partial_rows = list(partial_rows)
