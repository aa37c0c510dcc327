"""Structured exceptions for CWSSNet"""

from typing import Any, Optional


class CwssnetError(Exception):
    """Base class for all errors raised by the package"""

    exit_code = 1

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.message = message
        self.stage = stage

    def with_stage(self, stage: str) -> "CwssnetError":
        """Attach the pipeline stage name if none is set yet"""
        if self.stage is None:
            self.stage = stage
        return self

    def __str__(self) -> str:
        if self.stage:
            return f"[{self.stage}] {self.message}"
        return self.message


class ConfigError(CwssnetError):
    """Invalid run configuration or checkpoint/config mismatch"""

    exit_code = 2


class DataError(CwssnetError):
    """Malformed input data, containers, palettes or labels"""

    exit_code = 3


class NumericError(CwssnetError):
    """Non-finite loss or gradient during training"""

    exit_code = 4

    def __init__(self, message: str, tensor_name: Optional[str] = None, stage: Optional[str] = None):
        super().__init__(message, stage)
        self.tensor_name = tensor_name


class DimensionError(CwssnetError, ValueError):
    """Shape mismatch naming the offending axis"""

    def __init__(self, axis: str, expected: Any, actual: Any, context: str = ""):
        prefix = f"{context}: " if context else ""
        super().__init__(f"{prefix}dimension mismatch on axis '{axis}': expected {expected}, got {actual}")
        self.axis = axis
        self.expected = expected
        self.actual = actual


class PreconditionError(CwssnetError, ValueError):
    """Operation called outside its documented domain"""
