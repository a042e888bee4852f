"""Exception hierarchy for revmine.

Library code raises these; the CLI maps ``exit_code`` onto the process exit
status (1 usage/config, 2 data).
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional, Union


class RevmineError(Exception):
    exit_code = 2


class ConfigError(RevmineError):
    """Invalid arguments or configuration."""

    exit_code = 1


class DataError(RevmineError):
    """Input data violates a corpus, model or procedure precondition."""

    exit_code = 2


class ParseError(DataError):
    def __init__(self, path: Union[str, Path, None], line: Optional[int], reason: str):
        self.path = str(path) if path is not None else "<input>"
        self.line = line
        self.reason = reason
        where = f"{self.path}:{line}" if line is not None else self.path
        super().__init__(f"{where}: {reason}")


class ModelError(DataError):
    """Model file has an unknown version or corrupt content."""


class TrainingError(RevmineError):
    exit_code = 2
