"""Symmetric absmax INT4 quantization"""

from typing import Sequence, Union

import numpy as np

from src.errors import EmptyInput, NonFiniteInput
from src.models import QuantSpec

ArrayLike = Union[Sequence[float], np.ndarray]


def _as_finite(values: ArrayLike) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if not np.all(np.isfinite(array)):
        raise NonFiniteInput("quantization input contains NaN or infinity")
    return array


def round_half_away(x: np.ndarray) -> np.ndarray:
    """Nearest integer with halves rounded away from zero"""
    magnitude = np.abs(x)
    whole = np.floor(magnitude)
    return np.sign(x) * (whole + (magnitude - whole >= 0.5))


def quantize_codes(values: ArrayLike, spec: QuantSpec) -> np.ndarray:
    """Integer levels clip(round(W / delta), -8, 7)"""
    array = _as_finite(values)
    codes = np.clip(round_half_away(array / spec.delta), QuantSpec.QMIN, QuantSpec.QMAX)
    return codes.astype(np.int8)


def quantize_int4(values: ArrayLike, spec: QuantSpec) -> np.ndarray:
    """
    Snap values onto the 16 levels {-8*delta, ..., 7*delta}

    Halves round away from zero: a ratio of -2.5 lands on level -3.

    Raises:
        NonFiniteInput: any value is NaN or infinite
    """
    return quantize_codes(values, spec).astype(np.float64) * spec.delta


def absmax_delta(values: ArrayLike) -> float:
    """
    Step that maps the largest magnitude onto level 7

    An all-zero array gets delta 1.

    Raises:
        EmptyInput: no values
        NonFiniteInput: any value is NaN or infinite
    """
    array = _as_finite(values)
    if array.size == 0:
        raise EmptyInput("cannot derive a quantization step from no values")
    peak = float(np.max(np.abs(array)))
    return peak / QuantSpec.QMAX if peak > 0 else 1.0
