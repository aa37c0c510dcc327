"""Validation utilities and enumerations for CWSSNet"""

from enum import Enum
from typing import List, Optional, Sequence, Tuple

from utils.errors import DimensionError, PreconditionError


class PoolMode(Enum):
    """Supported pooling reductions"""
    MAX = "max"
    AVG = "avg"


class PaddingMode(Enum):
    """Supported convolution padding modes"""
    SAME = "same"
    VALID = "valid"


class WaveletName(Enum):
    """Supported wavelet families"""
    HAAR = "haar"
    DB2 = "db2"


class KernelSet(Enum):
    """WTBC kernel combinations"""
    K3 = "3x3"
    K5 = "5x5"
    BOTH = "3x3+5x5"


class AttentionWiring(Enum):
    """Frequency attention wiring inside WTBC"""
    SAME_BAND = "same_band"
    CROSS_BAND = "cross_band"


class OptimizerName(Enum):
    """Adaptive-moment optimizer variants"""
    ADAMW = "adamw"
    ADAM = "adam"


class ShapeValidator:
    """Validator for tensor extents and channel contracts"""

    @classmethod
    def require_ndim(cls, shape: Sequence[int], ndim: int, context: str) -> None:
        """Require an exact rank"""
        if len(shape) != ndim:
            raise DimensionError("rank", ndim, len(shape), context)

    @classmethod
    def require_even(cls, extent: int, axis: str, context: str) -> None:
        """Require an even spatial extent"""
        if extent % 2 != 0:
            raise PreconditionError(f"{context}: axis '{axis}' has odd extent {extent}")

    @classmethod
    def require_divisible(cls, extent: int, factor: int, axis: str, context: str) -> None:
        """Require extent to be a multiple of factor"""
        if factor <= 0 or extent % factor != 0:
            raise PreconditionError(
                f"{context}: axis '{axis}' extent {extent} is not divisible by {factor}"
            )

    @classmethod
    def require_channels(cls, actual: int, expected: int, context: str) -> None:
        """Require a channel count"""
        if actual != expected:
            raise DimensionError("channels", expected, actual, context)

    @classmethod
    def require_same_shape(cls, first: Tuple[int, ...], second: Tuple[int, ...], context: str) -> None:
        """Require two shapes to agree"""
        if tuple(first) != tuple(second):
            axis = next(
                (str(i) for i, (a, b) in enumerate(zip(first, second)) if a != b),
                "rank",
            )
            raise DimensionError(axis, tuple(first), tuple(second), context)

    @classmethod
    def require_spatial_match(cls, first: Tuple[int, ...], second: Tuple[int, ...], context: str) -> None:
        """Require equal trailing spatial extents of two NCHW shapes"""
        if tuple(first[2:]) != tuple(second[2:]):
            raise DimensionError("spatial", tuple(first), tuple(second), context)


class ArgumentParser:
    """Parsers for comma separated command line values"""

    @classmethod
    def parse_int_list(cls, text: Optional[str]) -> Optional[List[int]]:
        """Parse '8,16,32' into a list of ints"""
        if text is None:
            return None
        try:
            values = [int(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError:
            return None
        return values or None

    @classmethod
    def parse_float_list(cls, text: Optional[str]) -> Optional[List[float]]:
        """Parse '0.3,0.7' into a list of floats"""
        if text is None:
            return None
        try:
            values = [float(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError:
            return None
        return values or None

    @classmethod
    def parse_enum(cls, enum_type, text: Optional[str]):
        """Parse an enum by value, returning None when unknown"""
        if not text:
            return None
        lowered = text.lower().strip()
        for member in enum_type:
            if member.value == lowered:
                return member
        return None
