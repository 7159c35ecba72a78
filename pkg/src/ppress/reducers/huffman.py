"""Canonical Huffman coding over sparse integer alphabets.

Code lengths are capped so the decoder can use a flat window-indexed table;
when the unconstrained Huffman tree is deeper than the cap, symbol
frequencies are repeatedly halved until it fits (the classic zlib trick,
slightly suboptimal but always valid).
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from ..errors import CodecError

# 2^16 table entries cover alphabets up to 65536 present symbols; larger
# alphabets (possible when quant_bin_cap is raised) get an 18-bit cap.
_SMALL_LIMIT = 16
_LARGE_LIMIT = 18


def _huffman_lengths(freqs: dict[int, int]) -> dict[int, int]:
    syms = sorted(freqs)
    k = len(syms)
    if k == 1:
        return {syms[0]: 1}
    # merge tree with parent pointers; leaves are 0..k-1, internal nodes
    # get increasing ids so every parent id exceeds its children
    parent = [0] * (2 * k - 1)
    heap = [(freqs[s], i, i) for i, s in enumerate(syms)]
    heapq.heapify(heap)
    next_id = k
    while len(heap) > 1:
        fa, ta, a = heapq.heappop(heap)
        fb, tb, b = heapq.heappop(heap)
        parent[a] = next_id
        parent[b] = next_id
        heapq.heappush(heap, (fa + fb, min(ta, tb), next_id))
        next_id += 1
    depth = [0] * (2 * k - 1)
    for node in range(2 * k - 3, -1, -1):
        depth[node] = depth[parent[node]] + 1
    return {s: depth[i] for i, s in enumerate(syms)}


def code_lengths(freqs: dict[int, int], limit: int) -> dict[int, int]:
    """Length-limited Huffman code lengths for the given frequency table."""
    if (1 << limit) < len(freqs):
        raise CodecError(
            f"{len(freqs)} symbols cannot fit codes of <= {limit} bits"
        )
    work = dict(freqs)
    while True:
        lengths = _huffman_lengths(work)
        if max(lengths.values()) <= limit:
            return lengths
        work = {s: (f + 1) // 2 for s, f in work.items()}


def canonical_codes(lengths: dict[int, int]) -> dict[int, tuple[int, int]]:
    """Assign canonical codewords: symbols sorted by (length, symbol)."""
    order = sorted(lengths.items(), key=lambda kv: (kv[1], kv[0]))
    codes: dict[int, tuple[int, int]] = {}
    code = 0
    prev_len = order[0][1]
    for sym, length in order:
        code <<= length - prev_len
        codes[sym] = (code, length)
        code += 1
        prev_len = length
    return codes


@dataclass(frozen=True)
class HuffmanTable:
    """Canonical code book plus its wire form (symbol, length) pairs."""

    symbols: np.ndarray  # present symbols in canonical order
    lengths: np.ndarray  # code length per symbol, same order

    @classmethod
    def from_symbols(cls, stream: np.ndarray) -> "HuffmanTable":
        syms, counts = np.unique(stream, return_counts=True)
        limit = _SMALL_LIMIT if syms.size <= (1 << _SMALL_LIMIT) else _LARGE_LIMIT
        freqs = dict(zip(syms.tolist(), counts.tolist()))
        lengths = code_lengths(freqs, limit)
        order = sorted(lengths.items(), key=lambda kv: (kv[1], kv[0]))
        return cls(
            np.array([s for s, _ in order], dtype=np.uint32),
            np.array([l for _, l in order], dtype=np.uint8),
        )

    def codebook(self) -> dict[int, tuple[int, int]]:
        lengths = dict(zip(self.symbols.tolist(), self.lengths.tolist()))
        return canonical_codes(lengths)

    # wire form: u32 count, then per symbol u32 symbol + u8 length
    def to_bytes(self) -> bytes:
        head = np.uint32(self.symbols.size).tobytes()
        return head + self.symbols.astype("<u4").tobytes() + self.lengths.tobytes()

    @classmethod
    def from_bytes(cls, buf: bytes, offset: int) -> tuple["HuffmanTable", int]:
        if len(buf) < offset + 4:
            raise CodecError("truncated Huffman table")
        (count,) = np.frombuffer(buf, "<u4", count=1, offset=offset)
        count = int(count)
        offset += 4
        if len(buf) < offset + 5 * count:
            raise CodecError("truncated Huffman table")
        syms = np.frombuffer(buf, "<u4", count=count, offset=offset).astype(np.uint32)
        offset += 4 * count
        lens = np.frombuffer(buf, "u1", count=count, offset=offset).astype(np.uint8)
        offset += count
        if count == 0:
            raise CodecError("empty Huffman table")
        if not (lens[:-1] <= lens[1:]).all():
            raise CodecError("Huffman table lengths not in canonical order")
        return cls(syms, lens), offset


def encode(stream: np.ndarray, table: HuffmanTable) -> tuple[bytes, int]:
    """Pack a symbol stream with the table's canonical code, MSB first."""
    if stream.size == 0:
        return b"", 0
    book = table.codebook()
    uniq, inverse = np.unique(stream, return_inverse=True)
    try:
        pairs = [book[int(s)] for s in uniq]
    except KeyError as exc:
        raise CodecError(f"symbol {exc} missing from Huffman table") from None
    ucodes = np.array([c for c, _ in pairs], dtype=np.uint32)
    ulens = np.array([l for _, l in pairs], dtype=np.int64)
    cws = ucodes[inverse]
    lens = ulens[inverse]
    total = int(lens.sum())
    ends = np.cumsum(lens)
    starts = ends - lens
    owner = np.repeat(np.arange(stream.size, dtype=np.int64), lens)
    bitpos = np.arange(total, dtype=np.int64) - starts[owner]
    bits = (cws[owner] >> (lens[owner] - 1 - bitpos).astype(np.uint32)) & 1
    return np.packbits(bits.astype(np.uint8)).tobytes(), total


def decode(buf: bytes, n_bits: int, n_symbols: int, table: HuffmanTable) -> np.ndarray:
    """Decode n_symbols from a packed MSB-first bitstream."""
    if n_symbols == 0:
        return np.empty(0, dtype=np.int64)
    lengths = table.lengths
    width = int(lengths[-1])
    tsym = np.zeros(1 << width, dtype=np.int64)
    tlen = np.zeros(1 << width, dtype=np.int64)
    book = table.codebook()
    for sym in table.symbols.tolist():
        code, length = book[sym]
        start = code << (width - length)
        span = 1 << (width - length)
        tsym[start : start + span] = sym
        tlen[start : start + span] = length
    if (tlen == 0).any():
        # canonical codes fill the table exactly, except the degenerate
        # one-symbol code which only claims half of it
        if len(table.symbols) > 1:
            raise CodecError("Huffman table does not form a complete code")
        tsym[:] = int(table.symbols[0])
        tlen[:] = 1
    data = bytes(buf) + b"\x00\x00\x00\x00"
    sym_l = tsym.tolist()
    len_l = tlen.tolist()
    out = [0] * n_symbols
    pos = 0
    mask = (1 << width) - 1
    for i in range(n_symbols):
        bp = pos >> 3
        w = (
            (data[bp] << 24) | (data[bp + 1] << 16) | (data[bp + 2] << 8) | data[bp + 3]
        ) >> (32 - width - (pos & 7)) & mask
        out[i] = sym_l[w]
        pos += len_l[w]
    if pos != n_bits:
        raise CodecError(f"Huffman stream consumed {pos} bits, expected {n_bits}")
    return np.array(out, dtype=np.int64)
