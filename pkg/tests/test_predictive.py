import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from ppress.reducers import huffman, predictive


def enc_dec_abs(x, eb, cap=1 << 16, width=8):
    buf, recon = predictive.encode_abs(x, eb, cap, width)
    out = predictive.decode(buf, width)
    assert out.tobytes() == recon.tobytes(), "decode must match encoder reconstruction"
    return buf, out


def extract_symbols(buf, width=8):
    # parse a quantized stream far enough to recover the raw symbol array
    flags, n = predictive._HEAD.unpack_from(buf, 0)
    off = predictive._HEAD.size
    assert not flags & predictive._FLAG_VERBATIM
    step, cap, n_lit = predictive._QHEAD.unpack_from(buf, off)
    off += predictive._QHEAD.size + n_lit * width
    if flags & predictive._FLAG_SIGNS:
        off += (n + 7) // 8
    table, off = huffman.HuffmanTable.from_bytes(buf, off)
    (n_bits,) = predictive._BITS.unpack_from(buf, off)
    off += predictive._BITS.size
    return huffman.decode(buf[off:], n_bits, n, table), cap


def test_ramp_codes_and_drift():
    # hand-simulated recurrence: first value verbatim, then each unit step
    # quantizes to code 1 with step 1.2; drift stays within the bound
    x = np.array([0.0, 1.0, 2.0, 3.0])
    buf, out = enc_dec_abs(x, 0.6)
    syms, cap = extract_symbols(buf)
    assert syms[0] == predictive.LIT_SYM
    assert (syms[1:] - cap).tolist() == [1, 1, 1]
    assert np.all(np.abs(x - out) <= 0.6)
    assert out[0] == 0.0


def test_constant_column_codes():
    x = np.full(4, 5.0)
    buf, out = enc_dec_abs(x, 0.1)
    syms, cap = extract_symbols(buf)
    assert syms[0] == predictive.LIT_SYM
    assert (syms[1:] - cap).tolist() == [0, 0, 0]
    assert np.array_equal(out, x)


def test_constant_column_stream_is_small():
    x = np.full(4096, 5.0)
    buf, _ = enc_dec_abs(x, 1e-3)
    # verbatim would be 32768 bytes; the coded stream must stay well under
    # 1/50th of that to leave room for container overhead
    assert len(buf) < 600


def test_alternating_extremes_fall_back_to_literals():
    x = np.empty(4096)
    x[0::2] = 1e9
    x[1::2] = -1e9
    buf, out = enc_dec_abs(x, 1e-9)
    syms, _ = extract_symbols(buf)
    assert np.all(syms == predictive.LIT_SYM)
    assert np.array_equal(out, x)  # literals are exact
    assert len(buf) <= 1.05 * x.nbytes


def test_bound_holds_on_rough_data_all_bounds():
    rng = np.random.default_rng(0)
    x = rng.normal(size=2048) * 10
    for eb in [1e-1, 1e-3, 1e-6, 1e-9]:
        _, out = enc_dec_abs(x, eb)
        assert np.max(np.abs(x - out)) <= eb


def test_first_value_stored_verbatim():
    x = np.array([3.14159, 10.0, 20.0])
    _, out = enc_dec_abs(x, 0.5)
    assert out[0] == x[0]


def test_f32_contract_checked_after_narrowing():
    rng = np.random.default_rng(1)
    x = (rng.normal(size=512) * 100).astype(np.float32)
    eb = 1e-3
    buf, recon = predictive.encode_abs(x, eb, 1 << 16, 4)
    out = predictive.decode(buf, 4)
    assert out.tobytes() == recon.tobytes()
    narrowed = out.astype(np.float32)
    assert np.max(np.abs(x.astype(np.float64) - narrowed.astype(np.float64))) <= eb


def test_pwrel_contract_and_zeros():
    rng = np.random.default_rng(2)
    mags = 10.0 ** rng.uniform(-30, 30, size=2000)
    signs = rng.choice([-1.0, 1.0], size=2000)
    x = mags * signs
    x[::17] = 0.0
    for pw in [1e-1, 1e-3, 1e-6]:
        buf, recon = predictive.encode_pwrel(x, pw, 1 << 16, 8, None)
        out = predictive.decode(buf, 8)
        assert out.tobytes() == recon.tobytes()
        nz = x != 0
        assert np.all(np.abs(x[nz] - out[nz]) <= pw * np.abs(x[nz]))
        assert np.all(out[~nz] == 0.0)
        assert np.array_equal(np.signbit(out[nz]), np.signbit(x[nz]))


def test_pwrel_subnormals_collapse_to_zero():
    x = np.array([1.0, 5e-324, -3e-310, 2.0])
    buf, recon = predictive.encode_pwrel(x, 1e-2, 1 << 16, 8, None)
    out = predictive.decode(buf, 8)
    assert out[1] == 0.0 and out[2] == 0.0
    assert np.signbit(out[2])
    assert abs(out[0] - 1.0) <= 1e-2 and abs(out[3] - 2.0) <= 2e-2


def test_pwrel_all_zero_column():
    x = np.zeros(64)
    buf, recon = predictive.encode_pwrel(x, 1e-3, 1 << 16, 8, None)
    out = predictive.decode(buf, 8)
    assert np.array_equal(out, x)


def test_verbatim_stream_round_trip():
    x = np.array([1.5, -2.5, 3.5])
    buf = predictive.encode_verbatim(x, 8)
    out = predictive.decode(buf, 8)
    assert np.array_equal(out, x)


def test_monotone_error_on_mixed_signal():
    rng = np.random.default_rng(3)
    t = np.linspace(0, 8 * np.pi, 4096)
    x = np.sin(t) * 5 + rng.normal(size=4096) * 0.3
    errs = []
    for eb in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5]:
        _, out = enc_dec_abs(x, eb)
        errs.append(np.max(np.abs(x - out)))
    assert all(a >= b for a, b in zip(errs, errs[1:]))


def test_quantization_error_distribution_matches_uniform_model():
    # on high-entropy data the measured mse approaches eb^2/3
    rng = np.random.default_rng(4)
    x = rng.uniform(size=32768)
    eb = 1e-4
    _, out = enc_dec_abs(x, eb, cap=1 << 27)
    mse = np.mean((x - out) ** 2)
    assert mse == pytest.approx(eb**2 / 3, rel=0.05)


@settings(max_examples=60, deadline=None)
@given(
    x=hnp.arrays(
        np.float64,
        st.integers(1, 200),
        elements=st.floats(-1e12, 1e12, allow_nan=False, width=64),
    ),
    eb=st.floats(1e-12, 1e3, allow_nan=False),
)
def test_abs_contract_property(x, eb):
    _, out = enc_dec_abs(x, eb)
    assert np.all(np.abs(x - out) <= eb)


@settings(max_examples=40, deadline=None)
@given(
    x=hnp.arrays(
        np.float64,
        st.integers(1, 150),
        elements=st.one_of(
            st.floats(1e-8, 1e8),
            st.floats(-1e8, -1e-8),
            st.just(0.0),
        ),
    ),
    pw=st.floats(1e-9, 0.5),
)
def test_pwrel_contract_property(x, pw):
    buf, recon = predictive.encode_pwrel(x, pw, 1 << 16, 8, None)
    out = predictive.decode(buf, 8)
    assert out.tobytes() == recon.tobytes()
    nz = x != 0
    assert np.all(np.abs(x[nz] - out[nz]) <= pw * np.abs(x[nz]))
    assert np.all(out[~nz] == 0.0)
