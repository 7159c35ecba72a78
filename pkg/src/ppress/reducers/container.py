"""Self-describing binary container for reduced datasets.

Byte layout (all integers little-endian), in order:

  magic "PPRS" | version u16 | method u8 | mode u8 | n_bound u8 |
  bound f64 x n_bound | layout u8 | dtype-width u8 | n_obs u64 | n_feat u32 |
  stream_count u32 | per-stream table (offset u64, length u64, crc32 u32) |
  stream bytes

Offsets are absolute from the start of the container.  Everything a decoder
needs is in the container; no side channel.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from ..errors import DataFormatError
from .config import Layout, Method, Mode

MAGIC = b"PPRS"
VERSION = 1

_METHOD_CODE = {
    Method.EBLC_PRED: 1,
    Method.EBLC_BITPLANE: 2,
    Method.TRUNC: 3,
    Method.SAMPLE_NAIVE: 4,
    Method.SAMPLE_WR: 5,
    Method.SAMPLE_WOR: 6,
    Method.LOSSLESS: 7,
    Method.NONE: 8,
}
_CODE_METHOD = {v: k for k, v in _METHOD_CODE.items()}

_MODE_CODE = {
    Mode.NONE: 0,
    Mode.ABS: 1,
    Mode.REL: 2,
    Mode.PW_REL: 3,
    Mode.PSNR: 4,
    Mode.PREC: 5,
    Mode.ACC: 6,
    Mode.RATE: 7,
}
_CODE_MODE = {v: k for k, v in _MODE_CODE.items()}

_LAYOUT_CODE = {Layout.BY_COLUMN: 0, Layout.MATRIX: 1}
_CODE_LAYOUT = {v: k for k, v in _LAYOUT_CODE.items()}

_WIDTH_DTYPE = {4: "f32", 8: "f64"}
_DTYPE_WIDTH = {v: k for k, v in _WIDTH_DTYPE.items()}

_FIXED = struct.Struct("<4sHBBB")  # magic, version, method, mode, n_bound
_SHAPE = struct.Struct("<BBQII")  # layout, dtype width, n_obs, n_feat, n_streams
_ENTRY = struct.Struct("<QQI")  # offset, length, crc32


@dataclass(frozen=True)
class Artifact:
    """A reduced dataset plus the header needed to restore it."""

    method: Method
    mode: Mode
    c: tuple[float, ...]
    layout: Layout
    dtype: str
    n_obs: int
    n_feat: int
    streams: tuple[bytes, ...]

    @property
    def value_width(self) -> int:
        return _DTYPE_WIDTH[self.dtype]

    @property
    def orig_bytes(self) -> int:
        return self.n_obs * self.n_feat * self.value_width

    @property
    def header_bytes(self) -> int:
        return _FIXED.size + 8 * len(self.c) + _SHAPE.size + _ENTRY.size * len(self.streams)

    @property
    def comp_bytes(self) -> int:
        return self.header_bytes + sum(len(s) for s in self.streams)


def pack(artifact: Artifact) -> bytes:
    parts = [
        _FIXED.pack(
            MAGIC,
            VERSION,
            _METHOD_CODE[artifact.method],
            _MODE_CODE[artifact.mode],
            len(artifact.c),
        ),
        struct.pack(f"<{len(artifact.c)}d", *artifact.c),
        _SHAPE.pack(
            _LAYOUT_CODE[artifact.layout],
            artifact.value_width,
            artifact.n_obs,
            artifact.n_feat,
            len(artifact.streams),
        ),
    ]
    offset = artifact.header_bytes
    for s in artifact.streams:
        parts.append(_ENTRY.pack(offset, len(s), zlib.crc32(s)))
        offset += len(s)
    parts.extend(artifact.streams)
    out = b"".join(parts)
    if len(out) != artifact.comp_bytes:
        raise AssertionError("container size accounting is wrong")
    return out


def unpack(buf: bytes) -> Artifact:
    if len(buf) < _FIXED.size:
        raise DataFormatError("container shorter than fixed header")
    magic, version, method_code, mode_code, n_bound = _FIXED.unpack_from(buf, 0)
    if magic != MAGIC:
        raise DataFormatError(f"bad container magic {magic!r}")
    if version != VERSION:
        raise DataFormatError(f"unsupported container version {version}")
    off = _FIXED.size
    if len(buf) < off + 8 * n_bound + _SHAPE.size:
        raise DataFormatError("container header truncated")
    c = struct.unpack_from(f"<{n_bound}d", buf, off)
    off += 8 * n_bound
    layout_code, width, n_obs, n_feat, n_streams = _SHAPE.unpack_from(buf, off)
    off += _SHAPE.size

    method = _CODE_METHOD.get(method_code)
    mode = _CODE_MODE.get(mode_code)
    layout = _CODE_LAYOUT.get(layout_code)
    dtype = _WIDTH_DTYPE.get(width)
    if method is None or mode is None or layout is None or dtype is None:
        raise DataFormatError("container header has unknown enum codes")

    if len(buf) < off + _ENTRY.size * n_streams:
        raise DataFormatError("container stream table truncated")
    streams = []
    for i in range(n_streams):
        s_off, s_len, crc = _ENTRY.unpack_from(buf, off + _ENTRY.size * i)
        blob = buf[s_off : s_off + s_len]
        if len(blob) != s_len:
            raise DataFormatError(f"stream {i} extends past end of container")
        if zlib.crc32(blob) != crc:
            raise DataFormatError(f"stream {i} failed its checksum")
        streams.append(blob)
    return Artifact(
        method=method,
        mode=mode,
        c=tuple(c),
        layout=layout,
        dtype=dtype,
        n_obs=n_obs,
        n_feat=n_feat,
        streams=tuple(streams),
    )
