"""Utils module initialization"""

from .decorators import handle_errors, stage, timed
from .errors import (
    ConfigError,
    CwssnetError,
    DataError,
    DimensionError,
    NumericError,
    PreconditionError,
)
from .validators import ArgumentParser, ShapeValidator

__all__ = [
    'handle_errors',
    'stage',
    'timed',
    'ConfigError',
    'CwssnetError',
    'DataError',
    'DimensionError',
    'NumericError',
    'PreconditionError',
    'ArgumentParser',
    'ShapeValidator',
]
