"""Prediction-based error-bounded column codec.

Each value is predicted by the previous reconstructed value; the prediction
residual is quantized to an integer code with step 2*eb, so reconstruction
stays within eb of the input.  Codes whose magnitude reaches quant_bin_cap,
and values whose reconstruction would violate the bound after floating-point
rounding, are stored verbatim as literals.  The error contract is therefore
exact by construction, never just approximate.

The code stream (literal marker, quantizer codes, zero marker) is entropy
coded with a canonical Huffman table, one table per stream.

Pointwise-relative mode runs the same machinery on log-magnitudes with step
2*log1p(pw): a reconstruction within log1p(pw) of log|x| lands within a
factor (1+pw) of x.  Signs travel as a separate bitmask and exact zeros (or
magnitudes below the zero floor) get a dedicated symbol.
"""

from __future__ import annotations

import struct
from typing import Callable

import numpy as np

from ..errors import CodecError
from . import huffman

LIT_SYM = 0  # quantizer codes map to [1, 2*cap-1]; 2*cap marks a zero

_FLAG_VERBATIM = 1
_FLAG_SIGNS = 2
_FLAG_RAWCODES = 4

_HEAD = struct.Struct("<BQ")          # flags, n_values
_QHEAD = struct.Struct("<dII")        # step, cap, n_literals
_BITS = struct.Struct("<Q")           # n_bits
_RAWHEAD = struct.Struct("<B")        # fixed code width, raw streams only

_F32 = np.dtype("<f4")
_F64 = np.dtype("<f8")


def quantize(
    target: np.ndarray,
    verify: Callable[[int, int, np.ndarray], np.ndarray],
    step: float,
    cap: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quantize a stream against its own reconstruction.

    target: f64 values to quantize (data values, or log-magnitudes).
    verify(i, j, recon) -> bool mask checking the error contract for the
    candidate reconstruction of target[i:j] in the original value domain.

    Returns (symbols, reconstructed targets, literal positions).  The
    reconstruction is computed exactly as the decoder will compute it, so
    the two are bit-identical by construction.
    """
    n = target.size
    syms = np.empty(n, dtype=np.int64)
    recon = np.empty(n, dtype=np.float64)
    # a value this far from its predecessor cannot chain off it: the first
    # code after a fresh literal would already overflow the alphabet, so such
    # runs are certain literals and get emitted in bulk instead of probed
    # one restart at a time
    with np.errstate(invalid="ignore", over="ignore"):
        far = np.zeros(n, dtype=bool)
        if n > 1:
            far[1:] = np.abs(np.diff(target)) >= step * cap
    chainable = np.flatnonzero(~far)
    i = 0
    while i < n:
        k = int(np.searchsorted(chainable, i + 1))
        run_end = int(chainable[k]) if k < chainable.size else n
        syms[i:run_end] = LIT_SYM
        recon[i:run_end] = target[i:run_end]
        anchor = float(target[run_end - 1])
        i = run_end
        prev_s = 0.0
        width = 16
        while i < n:
            j = min(n, i + width)
            with np.errstate(invalid="ignore", over="ignore"):
                v = (target[i:j] - anchor) / step
                s = np.floor(v + 0.5)
                r = anchor + step * s
                q = np.diff(s, prepend=prev_s)
                ok = np.isfinite(v)
                ok &= np.abs(s) <= 2.0**52  # keep chain sums exact in f64
                ok &= np.abs(q) < cap
                ok &= verify(i, j, r)
            bad = np.flatnonzero(~ok)
            if bad.size:
                k = int(bad[0])
                if k:
                    syms[i : i + k] = q[:k].astype(np.int64) + cap
                    recon[i : i + k] = r[:k]
                i += k
                break
            syms[i:j] = q.astype(np.int64) + cap
            recon[i:j] = r
            prev_s = float(s[-1])
            i = j
            width = min(width * 2, 1 << 16)
    return syms, recon, np.flatnonzero(syms == LIT_SYM)


def dequantize(
    syms: np.ndarray, lit_targets: np.ndarray, step: float, cap: int
) -> np.ndarray:
    """Rebuild reconstructed targets from symbols and literal anchors."""
    n = syms.size
    lit_pos = np.flatnonzero(syms == LIT_SYM)
    if lit_pos.size != lit_targets.size or (lit_pos.size == 0 and n > 0):
        raise CodecError("literal count does not match symbol stream")
    if n == 0:
        return np.empty(0, dtype=np.float64)
    if lit_pos[0] != 0:
        raise CodecError("symbol stream must open with a literal")
    # segmented cumsum, all in int64 so every partial total is exact: zero
    # the literal slots, then rebase each literal so the running total
    # restarts from zero there instead of accumulating across segments
    q = syms - cap
    q[lit_pos] = 0
    seg_sums = np.add.reduceat(q, lit_pos)
    q[lit_pos[1:]] = -seg_sums[:-1]
    totals = np.cumsum(q)
    segment = np.cumsum(syms == LIT_SYM) - 1
    recon = lit_targets[segment] + step * totals.astype(np.float64)
    recon[lit_pos] = lit_targets
    return recon


def _cast_like(r: np.ndarray, width: int) -> np.ndarray:
    # the decoder's final cast to the dataset dtype is part of the contract
    return r.astype(_F32).astype(np.float64) if width == 4 else r


def _pack_fixed(syms: np.ndarray, width: int) -> tuple[bytes, int]:
    bits = (syms[:, None] >> np.arange(width - 1, -1, -1, dtype=np.int64)) & 1
    return np.packbits(bits.astype(np.uint8).ravel()).tobytes(), syms.size * width


def _unpack_fixed(buf: bytes, n: int, width: int) -> np.ndarray:
    need = (n * width + 7) // 8
    if len(buf) < need:
        raise CodecError("truncated raw symbol stream")
    bits = np.unpackbits(np.frombuffer(buf, np.uint8, count=need), count=n * width)
    weights = 1 << np.arange(width - 1, -1, -1, dtype=np.int64)
    return bits.reshape(n, width).astype(np.int64) @ weights


def _pack_symbols(syms: np.ndarray, cap: int) -> tuple[int, bytes]:
    """Entropy-code a symbol stream; returns (header flags, tail bytes).

    Canonical Huffman pays for its code table, roughly five bytes per
    distinct symbol.  Near-incompressible streams, where the alphabet is a
    sizable share of the stream itself, do better as raw fixed-width codes,
    which also keeps both directions fully vectorized.
    """
    n = syms.size
    raw_width = max(1, int(2 * cap).bit_length())
    k = int(np.unique(syms).size)
    huffman_bits = 40 * k + n * max(1.0, np.log2(max(k, 2)))
    if k > 256 and huffman_bits >= n * raw_width:
        packed, n_bits = _pack_fixed(syms, raw_width)
        return _FLAG_RAWCODES, b"".join(
            (_RAWHEAD.pack(raw_width), _BITS.pack(n_bits), packed)
        )
    table = huffman.HuffmanTable.from_symbols(syms)
    packed, n_bits = huffman.encode(syms, table)
    return 0, b"".join((table.to_bytes(), _BITS.pack(n_bits), packed))


def encode_abs(
    x: np.ndarray, eb: float, cap: int, width: int
) -> tuple[bytes, np.ndarray]:
    """Encode one stream under an absolute bound; returns (bytes, recon)."""
    if eb <= 0:
        raise CodecError(f"absolute bound must be positive, got {eb}")
    x64 = np.asarray(x, dtype=np.float64)
    step = 2.0 * eb

    def verify(i: int, j: int, r: np.ndarray) -> np.ndarray:
        with np.errstate(invalid="ignore"):
            return np.abs(x64[i:j] - _cast_like(r, width)) <= eb

    syms, recon, lits = quantize(x64, verify, step, cap)
    lit_bytes = np.ascontiguousarray(x[lits]).astype(
        _F32 if width == 4 else _F64
    ).tobytes()
    recon[lits] = x64[lits]
    flags, tail = _pack_symbols(syms, cap)
    out = b"".join(
        (
            _HEAD.pack(flags, x64.size),
            _QHEAD.pack(step, cap, len(lits)),
            lit_bytes,
            tail,
        )
    )
    return out, _cast_like(recon, width)


def encode_pwrel(
    x: np.ndarray, pw: float, cap: int, width: int, zero_floor: float | None
) -> tuple[bytes, np.ndarray]:
    """Encode one stream under a pointwise-relative bound."""
    if not 0 < pw < 1:
        raise CodecError(f"pointwise-relative bound must be in (0, 1), got {pw}")
    x64 = np.asarray(x, dtype=np.float64)
    n = x64.size
    if zero_floor is None:
        zero_floor = float(np.finfo(_F32 if width == 4 else _F64).tiny)
    neg = np.signbit(x64)
    with np.errstate(invalid="ignore"):
        is_zero = np.abs(x64) < zero_floor
        is_zero &= ~np.isnan(x64)
    nz = np.flatnonzero(~is_zero)
    xnz = x64[nz]
    negnz = neg[nz]
    with np.errstate(divide="ignore", invalid="ignore"):
        target = np.log(np.abs(xnz))
    step = 2.0 * float(np.log1p(pw))

    def verify(i: int, j: int, r: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            mag = np.exp(r)
            val = _cast_like(np.where(negnz[i:j], -mag, mag), width)
            return np.abs(xnz[i:j] - val) <= pw * np.abs(xnz[i:j])

    syms_nz, recon_t, lits = quantize(target, verify, step, cap)
    syms = np.full(n, 2 * cap, dtype=np.int64)
    syms[nz] = syms_nz

    recon = np.empty(n, dtype=np.float64)
    recon[is_zero] = np.where(neg[is_zero], -0.0, 0.0)
    with np.errstate(over="ignore"):
        mag = np.exp(recon_t)
    recon[nz] = np.where(negnz, -mag, mag)
    lit_rows = nz[lits]
    recon = _cast_like(recon, width)
    recon[lit_rows] = x64[lit_rows]  # literals are exact even under f32 rounding

    lit_bytes = np.ascontiguousarray(x[lit_rows]).astype(
        _F32 if width == 4 else _F64
    ).tobytes()
    sign_bytes = np.packbits(neg).tobytes()
    flags, tail = _pack_symbols(syms, cap)
    out = b"".join(
        (
            _HEAD.pack(_FLAG_SIGNS | flags, n),
            _QHEAD.pack(step, cap, len(lits)),
            lit_bytes,
            sign_bytes,
            tail,
        )
    )
    return out, recon


def encode_verbatim(x: np.ndarray, width: int) -> bytes:
    """Store a stream untouched (zero-range columns under REL/PSNR)."""
    body = np.ascontiguousarray(x).astype(_F32 if width == 4 else _F64).tobytes()
    return _HEAD.pack(_FLAG_VERBATIM, x.size) + body


def decode(buf: bytes, width: int) -> np.ndarray:
    """Decode one stream produced by any of the encoders above."""
    flags, n = _HEAD.unpack_from(buf, 0)
    off = _HEAD.size
    fdt = _F32 if width == 4 else _F64
    if flags & _FLAG_VERBATIM:
        vals = np.frombuffer(buf, fdt, count=n, offset=off)
        return vals.astype(np.float64)
    step, cap, n_lit = _QHEAD.unpack_from(buf, off)
    off += _QHEAD.size
    lit_vals = np.frombuffer(buf, fdt, count=n_lit, offset=off).astype(np.float64)
    off += n_lit * width
    neg = None
    if flags & _FLAG_SIGNS:
        nbytes = (n + 7) // 8
        neg = np.unpackbits(
            np.frombuffer(buf, np.uint8, count=nbytes, offset=off), count=n
        ).astype(bool)
        off += nbytes
    if flags & _FLAG_RAWCODES:
        (raw_width,) = _RAWHEAD.unpack_from(buf, off)
        off += _RAWHEAD.size
        (n_bits,) = _BITS.unpack_from(buf, off)
        off += _BITS.size
        if n_bits != n * raw_width:
            raise CodecError("raw symbol stream length mismatch")
        syms = _unpack_fixed(buf[off:], n, raw_width)
    else:
        table, off = huffman.HuffmanTable.from_bytes(buf, off)
        (n_bits,) = _BITS.unpack_from(buf, off)
        off += _BITS.size
        syms = huffman.decode(buf[off:], n_bits, n, table)

    if neg is None:
        recon = dequantize(syms, lit_vals, step, cap)
        lit_pos = np.flatnonzero(syms == LIT_SYM)
        recon[lit_pos] = lit_vals
        return _cast_like(recon, width)

    # pointwise-relative: zeros, then the log-domain chain over the rest
    is_zero = syms == 2 * cap
    nzpos = np.flatnonzero(~is_zero)
    with np.errstate(divide="ignore", invalid="ignore"):
        lit_targets = np.log(np.abs(lit_vals))
    recon_t = dequantize(syms[nzpos], lit_targets, step, cap)
    recon = np.empty(n, dtype=np.float64)
    recon[is_zero] = np.where(neg[is_zero], -0.0, 0.0)
    with np.errstate(over="ignore"):
        mag = np.exp(recon_t)
    recon[nzpos] = np.where(neg[nzpos], -mag, mag)
    recon = _cast_like(recon, width)
    lit_rows = nzpos[np.flatnonzero(syms[nzpos] == LIT_SYM)]
    recon[lit_rows] = lit_vals
    return recon
