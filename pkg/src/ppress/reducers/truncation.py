"""Width truncation: round values to a narrower IEEE format, then widen back."""

from __future__ import annotations

import numpy as np

from ..errors import CodecError, ConfigError
from ..tabular import Dataset

_NARROW = {32: np.dtype("<f4"), 16: np.dtype("<f2")}


def narrow_values(values: np.ndarray, target_width: int) -> np.ndarray:
    """Round-to-nearest-even cast; finite values that overflow are an error."""
    if target_width not in _NARROW:
        raise ConfigError(f"truncation width must be 32 or 16, got {target_width}")
    with np.errstate(over="ignore"):
        out = values.astype(_NARROW[target_width])
    overflow = np.isfinite(values) & ~np.isfinite(out)
    if overflow.any():
        i = int(np.flatnonzero(overflow.ravel())[0])
        raise CodecError(
            f"value {values.ravel()[i]!r} exceeds the f{target_width} range"
        )
    return out


def truncate(dataset: Dataset, target_width: int) -> Dataset:
    """Quantize to the target format while keeping the dataset dtype."""
    src_bits = {"f64": 64, "f32": 32}[dataset.dtype]
    if target_width not in _NARROW:
        raise ConfigError(f"truncation width must be 32 or 16, got {target_width}")
    if target_width >= src_bits:
        raise ConfigError(
            f"truncation to {target_width} bits needs wider input than {dataset.dtype}"
        )
    narrowed = narrow_values(dataset.values, target_width)
    return dataset.with_values(narrowed.astype(dataset.values.dtype))
