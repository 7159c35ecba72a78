"""Dataset reducers: error-bounded codecs, truncation, sampling, lossless."""

from .api import (
    PER_VALUE,
    ErrorReport,
    compress,
    compression_ratio,
    decompress,
    error_report,
    resolve_bound,
    retained_rows,
)
from .config import Layout, Method, Mode, ReducerConfig, ReducerKnobs
from .container import Artifact, pack, unpack
from .delta import delta_transform, inverse_delta
from .lossless import lossless_decode, lossless_encode, register_codec, registered_codecs
from .sampling import sample, sample_indices
from .truncation import narrow_values, truncate

__all__ = [
    "PER_VALUE",
    "ErrorReport",
    "compress",
    "compression_ratio",
    "decompress",
    "error_report",
    "resolve_bound",
    "retained_rows",
    "Layout",
    "Method",
    "Mode",
    "ReducerConfig",
    "ReducerKnobs",
    "Artifact",
    "pack",
    "unpack",
    "delta_transform",
    "inverse_delta",
    "lossless_decode",
    "lossless_encode",
    "register_codec",
    "registered_codecs",
    "sample",
    "sample_indices",
    "narrow_values",
    "truncate",
]
