"""Sliding-window segmentation and zero-endpoint filter highlighting.

Single-feature series are cut into fixed-length segments (32 s window, 16 s
stride by default) and each segment is multiplied by a raised-cosine filter
that starts and ends at zero, concentrating the signal mid-window.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class WindowError(Exception):
    """Series too short or configuration invalid."""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def hann_filter(n: int) -> np.ndarray:
    """Symmetric raised cosine: w[i] = 0.5*(1 - cos(2*pi*i/(n-1)))."""
    i = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * i / (n - 1)))


def triangular_filter(n: int) -> np.ndarray:
    i = np.arange(n)
    return 1.0 - np.abs(2.0 * i / (n - 1) - 1.0)


FILTERS = {"hann": hann_filter, "triangular": triangular_filter}


@dataclass(frozen=True)
class WindowConfig:
    """Window/stride in seconds, converted to sample counts (round half up)."""

    sample_period_s: float
    window_s: float = 32.0
    stride_s: float = 16.0
    filter_name: str = "hann"

    def __post_init__(self) -> None:
        if self.sample_period_s <= 0 or self.window_s <= 0 or self.stride_s <= 0:
            raise WindowError("window, stride, and sample period must be positive")
        if self.filter_name not in FILTERS:
            raise WindowError(f"unknown filter {self.filter_name!r}")
        if self.window_len < 2:
            raise WindowError(f"window_len {self.window_len} < 2")
        if not 1 <= self.stride_len <= self.window_len:
            raise WindowError(
                f"stride_len {self.stride_len} must be in [1, {self.window_len}]"
            )

    @property
    def window_len(self) -> int:
        return _round_half_up(self.window_s / self.sample_period_s)

    @property
    def stride_len(self) -> int:
        return _round_half_up(self.stride_s / self.sample_period_s)

    def filter_coefficients(self) -> np.ndarray:
        return FILTERS[self.filter_name](self.window_len)


@dataclass(frozen=True)
class Segment:
    """Fixed-length window of one feature's series, raw or highlighted."""

    feature: str
    start_index: int
    values: np.ndarray
    highlighted: bool = False


def segment_count(series_len: int, cfg: WindowConfig) -> int:
    if series_len < cfg.window_len:
        return 0
    return (series_len - cfg.window_len) // cfg.stride_len + 1


def slide(series: np.ndarray, cfg: WindowConfig, feature: str = "") -> list[Segment]:
    """Cut a series into full windows at stride intervals.

    Trailing samples short of a full window are dropped.
    """
    series = np.asarray(series, dtype=float)
    n = len(series)
    if n < cfg.window_len:
        raise WindowError(f"series of length {n} shorter than window {cfg.window_len}")
    count = segment_count(n, cfg)
    return [
        Segment(
            feature=feature,
            start_index=i * cfg.stride_len,
            values=series[i * cfg.stride_len : i * cfg.stride_len + cfg.window_len].copy(),
        )
        for i in range(count)
    ]


def highlight(seg: Segment, cfg: WindowConfig) -> Segment:
    """Multiply a raw segment by the zero-endpoint filter."""
    if seg.highlighted:
        raise WindowError("segment already highlighted")
    if len(seg.values) != cfg.window_len:
        raise WindowError(
            f"segment length {len(seg.values)} does not match window_len {cfg.window_len}"
        )
    return Segment(
        feature=seg.feature,
        start_index=seg.start_index,
        values=seg.values * cfg.filter_coefficients(),
        highlighted=True,
    )


def slide_highlighted(series: np.ndarray, cfg: WindowConfig, feature: str = "") -> list[Segment]:
    return [highlight(seg, cfg) for seg in slide(series, cfg, feature)]
