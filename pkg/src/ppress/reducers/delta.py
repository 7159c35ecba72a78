"""Order-1 and order-2 delta coding over integer bit patterns.

Floating point input is differenced in its unsigned bit-pattern domain, where
wrap-around arithmetic makes the transform exactly reversible.  The returned
array keeps the input dtype, so a float result is only meaningful as bytes;
integer input round-trips as ordinary values.
"""

from __future__ import annotations

import numpy as np

from ..errors import CodecError

_UINT_FOR = {1: np.uint8, 2: np.uint16, 4: np.uint32, 8: np.uint64}


def _uint_view(values: np.ndarray) -> np.ndarray:
    width = values.dtype.itemsize
    if width not in _UINT_FOR:
        raise CodecError(f"unsupported item width {width}")
    return np.ascontiguousarray(values).view(_UINT_FOR[width])


def _check(values: np.ndarray, order: int) -> None:
    if order not in (1, 2):
        raise CodecError(f"delta order must be 1 or 2, got {order}")
    if values.ndim != 1:
        raise CodecError("delta transform expects a 1-D array")
    if values.size < order:
        raise CodecError(f"need at least {order} values for order {order}")


def delta_transform(values: np.ndarray, order: int) -> np.ndarray:
    """First value kept, successors replaced by wrapped differences."""
    _check(values, order)
    u = _uint_view(values).copy()
    for _ in range(order):
        u[1:] -= u[:-1].copy()
    return u.view(values.dtype)


def inverse_delta(values: np.ndarray, order: int) -> np.ndarray:
    _check(values, order)
    u = _uint_view(values)
    for _ in range(order):
        u = np.cumsum(u, dtype=u.dtype)
    return u.view(values.dtype)
