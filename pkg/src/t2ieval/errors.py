"""Typed error hierarchy shared by all metric and IO modules.

Every error carries an ``exit_code`` so the CLI can map failures onto its
documented exit statuses: 2 for configuration problems, 3 for artifact or
input validation failures, 4 for numerical failures.
"""

from __future__ import annotations


class MetricsError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 1


class ConfigError(MetricsError):
    """Run configuration is missing, malformed, or inconsistent."""

    exit_code = 2


class IoError(MetricsError):
    """Reading or writing an artifact file failed at the OS level."""

    exit_code = 3


class FormatError(MetricsError):
    """An artifact file is structurally broken (missing, truncated, wrong shape)."""

    exit_code = 3


class ParseError(FormatError):
    """A record line is not valid JSON."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class ValidationError(MetricsError):
    """Well-formed input violates a documented invariant."""

    exit_code = 3

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyInputError(ValidationError):
    """A metric was asked to aggregate zero records."""


class UnmappedWordError(ValidationError):
    """A positional word has no antonym in the configured map."""


class DomainError(MetricsError):
    """A numeric argument is outside the mathematical domain (non-finite, T <= 0)."""

    exit_code = 4


class DegenerateError(MetricsError):
    """The optimization problem has no meaningful solution on this input."""

    exit_code = 4


class NumericalError(MetricsError):
    """A numerical routine failed or produced an out-of-tolerance result."""

    exit_code = 4
