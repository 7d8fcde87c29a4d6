"""Exception hierarchy shared by the library and the CLI.

Each class carries the process exit code the CLI uses when it escapes.
"""


class IdmError(Exception):
    exit_code = 1


class ConfigError(IdmError, ValueError):
    exit_code = 2


class DomainError(IdmError, ValueError):
    """A numerical argument lies outside the domain of an operation."""

    exit_code = 4


class ScheduleInconsistencyError(DomainError):
    """A schedule produced a negative radicand for g(t)."""


class DegenerateTimeError(DomainError):
    """The noise scale G(t) is too small for the score to be defined."""


class ShapeMismatchError(IdmError, ValueError):
    exit_code = 4


class WavFormatError(IdmError):
    """Malformed or unsupported RIFF/WAVE content."""

    exit_code = 3

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
