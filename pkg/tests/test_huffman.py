import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppress.errors import CodecError
from ppress.reducers import huffman


def round_trip(stream):
    stream = np.asarray(stream, dtype=np.int64)
    table = huffman.HuffmanTable.from_symbols(stream)
    buf, n_bits = huffman.encode(stream, table)
    wire, end = huffman.HuffmanTable.from_bytes(table.to_bytes(), 0)
    assert end == len(table.to_bytes())
    out = huffman.decode(buf, n_bits, stream.size, wire)
    return out


def test_round_trip_small():
    stream = [0, 0, 0, 1, 1, 2, 7, 0, 0, 2]
    assert round_trip(stream).tolist() == stream


def test_single_symbol_alphabet():
    stream = [5] * 100
    table = huffman.HuffmanTable.from_symbols(np.array(stream, dtype=np.int64))
    buf, n_bits = huffman.encode(np.array(stream, dtype=np.int64), table)
    # one symbol gets a 1-bit code: 100 bits -> 13 bytes
    assert n_bits == 100
    assert len(buf) == 13
    assert round_trip(stream).tolist() == stream


def test_kraft_equality_and_prefix_freedom():
    rng = np.random.default_rng(0)
    stream = rng.geometric(0.3, size=2000) + 10
    table = huffman.HuffmanTable.from_symbols(stream.astype(np.int64))
    book = table.codebook()
    lengths = [l for _, l in book.values()]
    assert sum(2.0 ** -l for l in lengths) == pytest.approx(1.0)
    words = sorted(format(c, f"0{l}b") for c, l in book.values())
    for a, b in zip(words, words[1:]):
        assert not b.startswith(a)


def test_optimality_against_entropy():
    # Huffman is within 1 bit/symbol of the entropy bound
    rng = np.random.default_rng(1)
    stream = rng.choice([0, 1, 2, 3], size=4096, p=[0.7, 0.15, 0.1, 0.05])
    stream = stream.astype(np.int64)
    table = huffman.HuffmanTable.from_symbols(stream)
    buf, n_bits = huffman.encode(stream, table)
    _, counts = np.unique(stream, return_counts=True)
    p = counts / counts.sum()
    entropy = -(p * np.log2(p)).sum()
    assert n_bits / stream.size <= entropy + 1.0
    assert n_bits / stream.size >= entropy


def test_skewed_lengths_respect_limit():
    # frequencies engineered to produce a very deep unconstrained tree
    freqs = {i: 2**i for i in range(40)}
    lengths = huffman.code_lengths(freqs, 16)
    assert max(lengths.values()) <= 16
    codes = huffman.canonical_codes(lengths)
    assert sum(2.0 ** -l for _, l in codes.values()) <= 1.0 + 1e-12


def test_large_alphabet_round_trip():
    rng = np.random.default_rng(2)
    stream = rng.integers(0, 70000, size=150000).astype(np.int64)
    assert np.array_equal(round_trip(stream), stream)


def test_corrupt_table_rejected():
    stream = np.array([1, 2, 3, 1], dtype=np.int64)
    table = huffman.HuffmanTable.from_symbols(stream)
    wire = bytearray(table.to_bytes())
    wire[-1] = 0  # zero out a code length
    with pytest.raises(CodecError):
        t, _ = huffman.HuffmanTable.from_bytes(bytes(wire), 0)
        huffman.decode(b"\x00", 8, 4, t)


def test_truncated_stream_rejected():
    stream = np.array([1, 2, 3, 1, 2, 3, 3, 3], dtype=np.int64)
    table = huffman.HuffmanTable.from_symbols(stream)
    buf, n_bits = huffman.encode(stream, table)
    with pytest.raises(CodecError):
        huffman.decode(buf, n_bits + 3, stream.size, table)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.integers(0, 300), min_size=1, max_size=500),
)
def test_round_trip_property(symbols):
    assert round_trip(symbols).tolist() == symbols
