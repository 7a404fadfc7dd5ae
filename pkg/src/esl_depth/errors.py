"""Exception hierarchy; each category maps to a distinct CLI exit code."""


class EslError(Exception):
    exit_code = 1


class ConfigError(EslError):
    """Invalid or malformed configuration value."""

    exit_code = 3


class ParseError(EslError):
    """A file exists but its content cannot be parsed."""

    exit_code = 4


class IOFailure(EslError):
    exit_code = 5


class DomainError(EslError, ValueError):
    """Inputs are well-formed but unusable together (shapes, empty overlap, ...)."""

    exit_code = 6


class DataError(DomainError):
    """Input data violates a contract (e.g. an event outside the sensor)."""
