"""Nearest-centroid reconstruction and per-sample reconstruction error.

A validation series is segmented, highlighted, and each segment replaced by
its nearest codebook centroid. Overlapping contributions are merged by
arithmetic mean; the highlighted original is merged the same way so the two
sequences compare sample-for-sample.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cluster import Codebook, assign
from .windowing import WindowError, slide, highlight


class ReconstructError(Exception):
    pass


@dataclass(frozen=True)
class Reconstruction:
    feature: str
    original_assembled: np.ndarray
    reconstructed: np.ndarray
    per_segment_assignments: tuple[tuple[int, int, float], ...]  # (start, centroid, distance)

    def __post_init__(self) -> None:
        if len(self.original_assembled) != len(self.reconstructed):
            raise ReconstructError("assembled sequences differ in length")


@dataclass(frozen=True)
class ErrorSeries:
    feature: str
    errors: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.errors < 0):
            raise ReconstructError("errors must be nonnegative")


def overlap_merge(pieces: list[tuple[int, np.ndarray]], total_len: int) -> np.ndarray:
    """Mean of overlapping contributions at each sample."""
    acc = np.zeros(total_len)
    count = np.zeros(total_len)
    for start, values in pieces:
        acc[start : start + len(values)] += values
        count[start : start + len(values)] += 1
    if np.any(count == 0):
        raise ReconstructError("overlap merge left uncovered samples")
    return acc / count


def reconstruct_series(series: np.ndarray, cb: Codebook) -> Reconstruction:
    """Rebuild a series from nearest codebook centroids."""
    cfg = cb.cfg
    series = np.asarray(series, dtype=float)
    if len(series) < cfg.window_len:
        raise WindowError(
            f"series of length {len(series)} shorter than window {cfg.window_len}"
        )
    segments = [highlight(seg, cfg) for seg in slide(series, cfg, cb.feature)]
    assignments = []
    original_pieces = []
    reconstructed_pieces = []
    for seg in segments:
        idx, dist = assign(seg, cb)
        assignments.append((seg.start_index, idx, dist))
        original_pieces.append((seg.start_index, seg.values))
        reconstructed_pieces.append((seg.start_index, cb.centroids[idx]))
    total_len = segments[-1].start_index + cfg.window_len
    return Reconstruction(
        feature=cb.feature,
        original_assembled=overlap_merge(original_pieces, total_len),
        reconstructed=overlap_merge(reconstructed_pieces, total_len),
        per_segment_assignments=tuple(assignments),
    )


def error_series(rec: Reconstruction) -> ErrorSeries:
    """Per-sample absolute difference between original and reconstruction."""
    return ErrorSeries(
        feature=rec.feature,
        errors=np.abs(rec.original_assembled - rec.reconstructed),
    )


def write_reconstruction_csv(rec: Reconstruction, err: ErrorSeries, path: str | Path) -> None:
    """Dump index/original/reconstructed/error columns for plotting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", "original_assembled", "reconstructed", "error"])
        for i, (o, r, e) in enumerate(zip(rec.original_assembled, rec.reconstructed, err.errors)):
            writer.writerow([i, repr(float(o)), repr(float(r)), repr(float(e))])
