"""Exception hierarchy. Each class carries the CLI exit code it maps to."""

from __future__ import annotations


class TecollapseError(Exception):
    exit_code = 1


class InputError(TecollapseError, ValueError):
    exit_code = 2


class ConfigError(TecollapseError, ValueError):
    exit_code = 2


class ManifestError(ConfigError):
    pass


class IntegrityError(TecollapseError):
    exit_code = 3


class FormatError(IntegrityError):
    """Malformed interchange file; ``offset`` is the byte position of the fault."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class TrainingError(TecollapseError, RuntimeError):
    exit_code = 1

    def __init__(self, message: str, epoch: int | None = None):
        if epoch is not None:
            message = f"{message} (epoch {epoch})"
        super().__init__(message)
        self.epoch = epoch
