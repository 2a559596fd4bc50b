"""Exception hierarchy.

All errors derive from ``ValueError`` so callers that only guard against
invalid input keep working.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any


class EmosKitError(ValueError):
    """Base class; ``context`` ends up in the CLI's machine-readable error line."""

    def __init__(self, message: str, **context: Any) -> None:
        super().__init__(message)
        self.context = {k: v for k, v in context.items() if v is not None}

    def __reduce__(self):
        return (_rebuild, (type(self), self.args, self.__dict__.copy()))


def _rebuild(cls: type, args: tuple, state: dict[str, Any]) -> "EmosKitError":
    # worker processes send errors back by pickle; keep the context
    err = cls.__new__(cls)
    err.args = args
    err.__dict__.update(state)
    return err


class DatasetError(EmosKitError):
    def __init__(self, message: str, *, path: Path | str | None = None, line: int | None = None) -> None:
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(f"{where}{message}", path=str(path) if path is not None else None, line=line)
        self.path = path
        self.line = line


class UnknownStationError(DatasetError):
    pass


class DuplicateRecordError(DatasetError):
    pass


class EmptyWindowError(EmosKitError):
    pass


class NonPositiveVarianceError(EmosKitError):
    pass


class UndefinedSkillError(EmosKitError):
    pass


class ClusteringError(EmosKitError):
    pass


class SeriesAlignmentError(EmosKitError):
    pass


class ConfigError(EmosKitError):
    pass


class ExperimentError(EmosKitError):
    pass


__all__ = [
    "EmosKitError",
    "DatasetError",
    "UnknownStationError",
    "DuplicateRecordError",
    "EmptyWindowError",
    "NonPositiveVarianceError",
    "UndefinedSkillError",
    "ClusteringError",
    "SeriesAlignmentError",
    "ConfigError",
    "ExperimentError",
]
