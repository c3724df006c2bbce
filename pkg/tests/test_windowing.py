import numpy as np
import pytest
from hypothesis import given, strategies as st

from theftdetect.windowing import (
    Segment,
    WindowConfig,
    WindowError,
    hann_filter,
    highlight,
    slide,
    triangular_filter,
)


def cfg(window=32, stride=16, period=1.0, filter_name="hann"):
    return WindowConfig(
        sample_period_s=period, window_s=window, stride_s=stride, filter_name=filter_name
    )


def test_slide_counts_64():
    segs = slide(np.arange(64.0), cfg())
    assert [s.start_index for s in segs] == [0, 16, 32]


def test_slide_exact_window():
    segs = slide(np.arange(32.0), cfg())
    assert len(segs) == 1


def test_slide_too_short():
    with pytest.raises(WindowError):
        slide(np.arange(31.0), cfg())


def test_slide_copies_values():
    series = np.arange(64.0)
    segs = slide(series, cfg())
    segs[0].values[0] = 99.0
    assert series[0] == 0.0


@given(
    length=st.integers(2, 500),
    window=st.integers(2, 64),
    stride=st.integers(1, 64),
)
def test_slide_count_formula(length, window, stride):
    stride = min(stride, window)
    c = cfg(window=window, stride=stride)
    if length < window:
        with pytest.raises(WindowError):
            slide(np.zeros(length), c)
        return
    segs = slide(np.zeros(length), c)
    assert len(segs) == (length - window) // stride + 1
    # concatenation at stride covers [0, last_start + window) exactly
    covered = np.zeros(length, dtype=bool)
    for s in segs:
        covered[s.start_index : s.start_index + window] = True
    last = segs[-1].start_index
    assert covered[: last + window].all()
    assert not covered[last + window :].any()


def test_filter_values_n32():
    # w[n] = 0.5*(1 - cos(2*pi*n/31)) evaluated directly
    w = hann_filter(32)
    assert w[0] == 0.0 and w[31] == 0.0
    assert w[15] == pytest.approx(0.9974346616959475, abs=1e-15)
    assert w[16] == pytest.approx(0.9974346616959475, abs=1e-15)


def test_highlight_all_ones_equals_filter():
    seg = Segment("f", 0, np.ones(32))
    out = highlight(seg, cfg())
    np.testing.assert_allclose(out.values, hann_filter(32), atol=0)
    assert out.highlighted


def test_highlight_all_zeros():
    out = highlight(Segment("f", 0, np.zeros(32)), cfg())
    assert (out.values == 0).all()


@given(st.integers(2, 200))
def test_filter_endpoints_exactly_zero(n):
    for f in (hann_filter, triangular_filter):
        w = f(n)
        assert w[0] == 0.0
        assert w[n - 1] == 0.0


@given(st.integers(2, 200))
def test_filter_symmetry(n):
    w = hann_filter(n)
    assert np.max(np.abs(w - w[::-1])) < 1e-12


def test_highlight_endpoints_zero_any_segment():
    rng = np.random.default_rng(0)
    out = highlight(Segment("f", 0, rng.normal(size=32) * 1e6), cfg())
    assert out.values[0] == 0.0
    assert out.values[-1] == 0.0


def test_highlight_linear():
    rng = np.random.default_rng(1)
    x, y = rng.normal(size=32), rng.normal(size=32)
    a, b = 2.5, -1.25
    c = cfg()
    lhs = highlight(Segment("f", 0, a * x + b * y), c).values
    rhs = a * highlight(Segment("f", 0, x), c).values + b * highlight(Segment("f", 0, y), c).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_highlight_twice_rejected():
    seg = highlight(Segment("f", 0, np.ones(32)), cfg())
    with pytest.raises(WindowError):
        highlight(seg, cfg())


def test_window_config_validation():
    with pytest.raises(WindowError):
        WindowConfig(sample_period_s=1.0, window_s=1.0, stride_s=1.0)  # window_len < 2
    with pytest.raises(WindowError):
        WindowConfig(sample_period_s=1.0, window_s=32.0, stride_s=48.0)  # stride > window
    with pytest.raises(WindowError):
        WindowConfig(sample_period_s=1.0, window_s=32.0, stride_s=16.0, filter_name="boxcar")


def test_seconds_to_samples_round_half_up():
    c = WindowConfig(sample_period_s=0.5, window_s=32.0, stride_s=16.0)
    assert c.window_len == 64
    assert c.stride_len == 32
    c2 = WindowConfig(sample_period_s=3.0, window_s=32.0, stride_s=16.0)
    assert c2.window_len == 11  # 10.67 rounds half up
    assert c2.stride_len == 5
