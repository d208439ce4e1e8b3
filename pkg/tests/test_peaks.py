import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from biocomp.peaks import detect_peaks
from tests.conftest import make_signal


def brute_force_peaks(values, rate, min_distance_s, min_prominence):
    """Independent oracle: O(n^2) local-maxima scan, prominence by full
    valley search, then greedy strongest-first selection."""
    values = np.asarray(values, float)
    n = len(values)
    candidates = []
    for i in range(1, n - 1):
        j = i  # plateau scan: a flat top counts once, at its first sample
        while j < n - 1 and values[j + 1] == values[i]:
            j += 1
        if values[i] > values[i - 1] and j < n - 1 and values[j + 1] < values[i]:
            candidates.append(i)
    kept = []
    for i in candidates:
        h = values[i]
        lo, left_min = i, h
        while lo > 0 and values[lo - 1] <= h:
            lo -= 1
            left_min = min(left_min, values[lo])
        hi, right_min = i, h
        while hi < n - 1 and values[hi + 1] <= h:
            hi += 1
            right_min = min(right_min, values[hi])
        if h - max(left_min, right_min) >= min_prominence:
            kept.append(i)
    chosen = []
    for i in sorted(kept, key=lambda k: (-values[k], k)):
        if all(abs(i - j) >= min_distance_s * rate for j in chosen):
            chosen.append(i)
    return sorted(chosen)


def triangle(center, half_width, amplitude, n):
    x = np.zeros(n)
    for offset in range(-half_width, half_width + 1):
        idx = center + offset
        if 0 <= idx < n:
            x[idx] = amplitude * (1 - abs(offset) / half_width)
    return x


class TestDetectPeaks:
    def test_monotone_has_no_peaks(self):
        sig = make_signal(values=np.linspace(0, 1, 50))
        assert detect_peaks(sig, 1.0, 0.0) == []

    def test_three_bumps(self):
        values = (
            triangle(20, 5, 1.0, 140) + triangle(60, 5, 2.0, 140) + triangle(100, 5, 3.0, 140)
        )
        sig = make_signal(rate=4.0, values=values)
        peaks = detect_peaks(sig, 1.0, 0.1)
        assert [p.amplitude for p in peaks] == [1.0, 2.0, 3.0]
        assert [p.index for p in peaks] == [20, 60, 100]
        oracle = brute_force_peaks(values, 4.0, 1.0, 0.1)
        assert [p.index for p in peaks] == oracle

    def test_close_bumps_keep_taller(self):
        values = triangle(30, 8, 1.0, 100) + triangle(36, 8, 2.0, 100)
        sig = make_signal(rate=4.0, values=values)
        peaks = detect_peaks(sig, 3.0, 0.05)  # 3 s * 4 Hz = 12 samples > 6 apart
        assert len(peaks) == 1
        assert peaks[0].amplitude == pytest.approx(values.max())

    def test_amplitude_tie_earlier_wins(self):
        values = triangle(30, 5, 1.0, 100) + triangle(40, 5, 1.0, 100)
        sig = make_signal(rate=4.0, values=values)
        peaks = detect_peaks(sig, 5.0, 0.05)  # 20-sample spacing kills one
        assert len(peaks) == 1
        assert peaks[0].index == 30

    def test_prominence_filters_shoulder_ripple(self):
        base = triangle(50, 30, 2.0, 101)
        ripple = triangle(35, 2, 0.1, 101)
        sig = make_signal(rate=4.0, values=base + ripple)
        amps = [p.index for p in detect_peaks(sig, 0.25, 0.5)]
        assert amps == [50]

    def test_empty_and_short_signals(self):
        assert detect_peaks(make_signal(values=[1.0, 2.0]), 1.0, 0.0) == []
        assert detect_peaks(make_signal(values=np.ones(30)), 1.0, 0.0) == []

    @settings(max_examples=60, deadline=None)
    @given(
        seed=st.integers(0, 10_000),
        min_distance=st.sampled_from([0.25, 0.5, 1.0, 2.0]),
        prominence=st.sampled_from([0.0, 0.1, 0.5, 1.0]),
    )
    def test_matches_brute_force_oracle(self, seed, min_distance, prominence):
        rng = np.random.default_rng(seed)
        values = np.round(rng.normal(size=80), 2)  # rounding provokes ties/plateaus
        sig = make_signal(rate=4.0, values=values)
        ours = [p.index for p in detect_peaks(sig, min_distance, prominence)]
        assert ours == brute_force_peaks(values, 4.0, min_distance, prominence)
