"""Prominence-based peak detection with a minimum inter-peak distance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ingest import SampledSignal


@dataclass(frozen=True)
class Peak:
    index: int
    amplitude: float


def _local_maxima(values: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; a flat plateau yields its first sample."""
    n = len(values)
    if n < 3:
        return np.array([], dtype=int)
    maxima = []
    i = 1
    while i < n - 1:
        if values[i] > values[i - 1]:
            j = i
            while j < n - 1 and values[j + 1] == values[i]:
                j += 1
            if j < n - 1 and values[j + 1] < values[i]:
                maxima.append(i)
            i = j + 1
        else:
            i += 1
    return np.array(maxima, dtype=int)


def _prominence(values: np.ndarray, peak: int) -> float:
    """Topographic prominence: height above the higher of the two bounding valleys.

    Each side is scanned until a sample higher than the peak (or the signal
    edge); the valley is the minimum over that stretch.
    """
    h = values[peak]
    left = values[:peak][::-1]
    stop = np.argmax(left > h) if (left > h).any() else len(left)
    left_valley = left[: stop + 1].min() if len(left) else h
    right = values[peak + 1 :]
    stop = np.argmax(right > h) if (right > h).any() else len(right)
    right_valley = right[: stop + 1].min() if len(right) else h
    return float(h - max(left_valley, right_valley))


def detect_peaks(
    signal: SampledSignal, min_distance_s: float, min_prominence: float
) -> list[Peak]:
    """Local maxima with at least ``min_prominence`` and pairwise spacing
    of at least ``min_distance_s``.

    When two candidates are closer than the minimum distance the higher
    amplitude wins; equal amplitudes resolve to the earlier index. An empty
    result is valid (e.g. a monotone signal has no peaks).
    """
    values = np.asarray(signal.values, dtype=float)
    candidates = _local_maxima(values)
    if len(candidates) == 0:
        return []
    keep = [i for i in candidates if _prominence(values, i) >= min_prominence]
    if not keep:
        return []
    min_gap = min_distance_s * signal.sample_rate
    # greedy selection: strongest first, earlier index breaking amplitude ties
    order = sorted(keep, key=lambda i: (-values[i], i))
    chosen: list[int] = []
    for i in order:
        if all(abs(i - j) >= min_gap for j in chosen):
            chosen.append(i)
    chosen.sort()
    return [Peak(index=int(i), amplitude=float(values[i])) for i in chosen]
