"""Top-level reduce/restore entry points over the container format."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from ..errors import CodecError, ConfigError, DataFormatError
from ..tabular import DTYPES, ColumnStats, Dataset, column_stats, default_names, global_stats
from . import bitplane, delta, lossless, predictive, sampling, truncation
from .config import SAMPLING_METHODS, Layout, Method, Mode, ReducerConfig
from .container import Artifact, pack, unpack

__all__ = [
    "PER_VALUE",
    "ErrorReport",
    "Artifact",
    "pack",
    "unpack",
    "resolve_bound",
    "compress",
    "decompress",
    "error_report",
    "compression_ratio",
]


class _PerValue:
    """Sentinel: the bound is relative to each value, not a single number."""

    def __repr__(self) -> str:
        return "PER_VALUE"


PER_VALUE = _PerValue()

_SAMPLE_SCHEME = {
    Method.SAMPLE_NAIVE: "naive",
    Method.SAMPLE_WR: "wr",
    Method.SAMPLE_WOR: "wor",
}


def resolve_bound(mode: Mode, c_value: float, stats: ColumnStats | None = None):
    """Turn a mode-relative bound into an absolute one in data units.

    Returns 0.0 for a REL/PSNR bound on a zero-range column (the caller
    stores such columns verbatim) and PER_VALUE for PW_REL.
    """
    if not c_value > 0:
        raise ConfigError(f"bound must be positive, got {c_value}")
    mode = Mode(mode)
    if mode is Mode.ABS:
        return float(c_value)
    if mode is Mode.PW_REL:
        return PER_VALUE
    if mode in (Mode.REL, Mode.PSNR):
        if stats is None:
            raise ConfigError(f"{mode.value} bound needs column statistics")
        if stats.range == 0:
            return 0.0
        if mode is Mode.REL:
            return float(c_value * stats.range)
        return float(math.sqrt(3.0) * stats.range * 10.0 ** (-c_value / 20.0))
    raise ConfigError(f"mode {mode.value} does not define an absolute bound")


def _encode_stream(col: np.ndarray, stats: ColumnStats, config: ReducerConfig, width: int) -> bytes:
    knobs = config.knobs
    method = config.method
    if method is Method.NONE:
        return col.tobytes()
    if method is Method.LOSSLESS:
        arr = delta.delta_transform(col, knobs.delta_order) if knobs.delta_order else col
        return bytes([knobs.delta_order]) + lossless.lossless_encode(
            arr.tobytes(), knobs.codec, knobs.codec_level
        )
    if method is Method.TRUNC:
        return truncation.narrow_values(col, int(config.c[0])).tobytes()
    if method is Method.EBLC_PRED:
        eb = resolve_bound(config.mode, config.c[0], stats)
        if eb is PER_VALUE:
            return predictive.encode_pwrel(
                col, config.c[0], knobs.quant_bin_cap, width, knobs.pw_rel_zero_floor
            )[0]
        if eb == 0.0:
            return predictive.encode_verbatim(col, width)
        return predictive.encode_abs(col, eb, knobs.quant_bin_cap, width)[0]
    if method is Method.EBLC_BITPLANE:
        return bitplane.encode(col, config.mode.value, config.c[0], knobs.block_size, width)[0]
    raise ConfigError(f"method {method.value} has no stream encoder")


def compress(dataset: Dataset, config: ReducerConfig) -> tuple[Artifact, float, float]:
    """Reduce a dataset; returns (artifact, seconds, MB/s over input bytes)."""
    config = config if isinstance(config, ReducerConfig) else ReducerConfig(**config)
    t0 = time.perf_counter()
    width = dataset.values.dtype.itemsize
    if config.method is Method.TRUNC and int(config.c[0]) >= 8 * width:
        raise ConfigError(
            f"truncation to {int(config.c[0])} bits needs wider input than {dataset.dtype}"
        )

    if config.method in SAMPLING_METHODS:
        idx = sampling.sample_indices(
            dataset.n_obs, _SAMPLE_SCHEME[config.method], config.c[0], config.knobs.seed
        )
        kept = dataset.values[idx]
        if config.layout is Layout.MATRIX:
            streams = [np.ascontiguousarray(kept).tobytes()]
        else:
            streams = [np.ascontiguousarray(kept[:, j]).tobytes() for j in range(dataset.n_feat)]
    elif config.layout is Layout.MATRIX:
        flat = dataset.values.ravel()
        streams = [_encode_stream(flat, global_stats(dataset), config, width)]
    else:
        stats = column_stats(dataset)
        streams = [
            _encode_stream(
                np.ascontiguousarray(dataset.values[:, j]), stats[j], config, width
            )
            for j in range(dataset.n_feat)
        ]

    artifact = Artifact(
        method=config.method,
        mode=config.mode,
        c=config.c,
        layout=config.layout,
        dtype=dataset.dtype,
        n_obs=dataset.n_obs,
        n_feat=dataset.n_feat,
        streams=tuple(streams),
    )
    dt = time.perf_counter() - t0
    return artifact, dt, dataset.n_bytes / 1e6 / max(dt, 1e-12)


def _decode_stream(blob: bytes, artifact: Artifact, np_dtype: np.dtype) -> np.ndarray:
    method = artifact.method
    width = artifact.value_width
    if method is Method.NONE or method in SAMPLING_METHODS:
        return np.frombuffer(blob, np_dtype)
    if method is Method.LOSSLESS:
        order = blob[0]
        arr = np.frombuffer(lossless.lossless_decode(blob[1:]), np_dtype)
        return delta.inverse_delta(arr, order) if order else arr
    if method is Method.TRUNC:
        narrow = np.dtype("<f4") if int(artifact.c[0]) == 32 else np.dtype("<f2")
        return np.frombuffer(blob, narrow).astype(np_dtype)
    if method is Method.EBLC_PRED:
        return predictive.decode(blob, width).astype(np_dtype, copy=False)
    if method is Method.EBLC_BITPLANE:
        return bitplane.decode(blob, width).astype(np_dtype, copy=False)
    raise DataFormatError(f"method {method.value} has no stream decoder")


def decompress(
    artifact: Artifact, names: tuple[str, ...] | None = None
) -> tuple[Dataset, float, float]:
    """Restore a dataset from an artifact; returns (dataset, seconds, MB/s)."""
    t0 = time.perf_counter()
    np_dtype = np.dtype(DTYPES[artifact.dtype])
    cols = [_decode_stream(blob, artifact, np_dtype) for blob in artifact.streams]
    if artifact.layout is Layout.MATRIX:
        flat = cols[0]
        if flat.size % artifact.n_feat:
            raise DataFormatError("matrix stream size is not a multiple of n_feat")
        values = flat.reshape(-1, artifact.n_feat)
    else:
        if len(cols) != artifact.n_feat:
            raise DataFormatError(
                f"{len(cols)} streams for {artifact.n_feat} columns"
            )
        sizes = {c.size for c in cols}
        if len(sizes) != 1:
            raise DataFormatError("columns decoded to different lengths")
        values = np.column_stack(cols)
    if artifact.method not in SAMPLING_METHODS and values.shape[0] != artifact.n_obs:
        raise DataFormatError(
            f"decoded {values.shape[0]} rows, header says {artifact.n_obs}"
        )
    ds = Dataset(
        values,
        tuple(names) if names is not None else default_names(artifact.n_feat),
        artifact.dtype,
        allow_nonfinite=True,
    )
    dt = time.perf_counter() - t0
    return ds, dt, ds.n_bytes / 1e6 / max(dt, 1e-12)


def retained_rows(artifact: Artifact) -> int:
    """Rows present in the artifact (smaller than n_obs for sampling)."""
    if not artifact.streams:
        return 0
    per_value = artifact.value_width
    if artifact.method in SAMPLING_METHODS:
        n = len(artifact.streams[0]) // per_value
        return n // artifact.n_feat if artifact.layout is Layout.MATRIX else n
    return artifact.n_obs


def compression_ratio(artifact: Artifact) -> float:
    """orig/comp byte ratio; for sampling, original rows over kept rows."""
    if artifact.method in SAMPLING_METHODS:
        kept = retained_rows(artifact)
        if kept == 0:
            raise DataFormatError("sampling artifact holds no rows")
        return artifact.n_obs / kept
    return artifact.orig_bytes / artifact.comp_bytes


@dataclass(frozen=True)
class ErrorReport:
    """Reconstruction error summary of a restored dataset vs its original."""

    max_abs_err: float
    max_rel_to_range_err: float
    mse: float
    psnr_db: float
    column_max_abs_err: tuple[float, ...]
    column_max_rel_to_range_err: tuple[float, ...]


def error_report(original: Dataset, restored: Dataset) -> ErrorReport:
    if original.values.shape != restored.values.shape:
        raise DataFormatError(
            f"shape mismatch: {original.values.shape} vs {restored.values.shape}"
        )
    x = original.values.astype(np.float64)
    y = restored.values.astype(np.float64)
    err = np.abs(x - y)
    col_max = err.max(axis=0)
    ranges = x.max(axis=0) - x.min(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        col_rel = np.where(col_max == 0.0, 0.0, col_max / ranges)
    mse = float(np.mean((x - y) ** 2))
    grange = float(x.max() - x.min())
    if mse == 0.0:
        psnr = math.inf
    elif grange == 0.0:
        psnr = -math.inf
    else:
        psnr = 10.0 * math.log10(grange * grange / mse)
    return ErrorReport(
        max_abs_err=float(col_max.max()),
        max_rel_to_range_err=float(col_rel.max()),
        mse=mse,
        psnr_db=psnr,
        column_max_abs_err=tuple(float(v) for v in col_max),
        column_max_rel_to_range_err=tuple(float(v) for v in col_rel),
    )
