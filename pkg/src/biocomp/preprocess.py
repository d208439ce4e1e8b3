"""Baseline statistics, Z-score normalization, and zero-phase band filtering."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .errors import DegenerateBaselineError, FilterDesignError, InsufficientBaselineError
from .ingest import ChannelKind, SampledSignal, Session

BASELINE_SECONDS = 30.0

#: Band edges in Hz. ``None`` marks an open edge (low-pass / high-pass).
EEG_BANDS: dict[str, tuple[float | None, float | None]] = {
    "delta": (None, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "beta": (12.0, 30.0),
    "gamma": (30.0, None),
}
BVP_BAND = (1.0, 8.0)

FILTER_ORDER = 4


@dataclass(frozen=True)
class ChannelStats:
    mean: float
    std: float
    n_samples: int


@dataclass(frozen=True)
class BaselineStats:
    """Per-channel mean/std over the last 30 s of the calibration video."""

    window_start: float
    window_end: float
    channels: dict[ChannelKind, ChannelStats]

    def __getitem__(self, kind: ChannelKind) -> ChannelStats:
        return self.channels[kind]

    def __contains__(self, kind: ChannelKind) -> bool:
        return kind in self.channels


def baseline_stats(session: Session) -> BaselineStats:
    """Compute per-channel calibration statistics.

    The window is [baseline_end - 30 s, baseline_end]; std is the sample
    standard deviation (divisor n-1). A zero std is recorded here and only
    rejected when normalization is attempted.
    """
    w_end = session.baseline_end
    w_start = w_end - BASELINE_SECONDS
    stats: dict[ChannelKind, ChannelStats] = {}
    for kind, signal in session.channels.items():
        if signal.start_time > w_start + 1e-9 or signal.end_time < w_end - 1e-9:
            raise InsufficientBaselineError(
                f"{kind.value}: channel covers [{signal.start_time}, {signal.end_time}], "
                f"baseline window is [{w_start}, {w_end}]"
            )
        lo = math.ceil((w_start - signal.start_time) * signal.sample_rate - 1e-9)
        hi = math.floor((w_end - signal.start_time) * signal.sample_rate + 1e-9)
        chunk = signal.values[max(lo, 0) : hi + 1]
        stats[kind] = ChannelStats(
            mean=float(np.mean(chunk)),
            std=float(np.std(chunk, ddof=1)) if len(chunk) > 1 else 0.0,
            n_samples=len(chunk),
        )
    return BaselineStats(window_start=w_start, window_end=w_end, channels=stats)


def zscore(signal: SampledSignal, stats: BaselineStats) -> SampledSignal:
    """Normalize a channel against its own baseline: (x - mean) / std."""
    ch = stats[signal.channel_kind]
    if ch.std == 0.0:
        raise DegenerateBaselineError(
            f"{signal.channel_kind.value}: flat calibration recording (std = 0)"
        )
    return signal.replace_values((signal.values - ch.mean) / ch.std)


def _design(low_hz: float | None, high_hz: float | None, rate: float):
    nyquist = rate / 2.0
    low = None if low_hz in (None, 0, 0.0) else float(low_hz)
    high = None if high_hz is None else float(high_hz)
    if low is None and high is None:
        raise FilterDesignError("at least one band edge must be finite")
    if high is not None and high >= nyquist:
        raise FilterDesignError(f"high edge {high} Hz >= Nyquist {nyquist} Hz")
    if low is not None and low >= nyquist:
        raise FilterDesignError(f"low edge {low} Hz >= Nyquist {nyquist} Hz")
    if low is not None and high is not None and low >= high:
        raise FilterDesignError(f"band edges out of order: {low} >= {high}")
    if low is None:
        return sps.butter(FILTER_ORDER, high / nyquist, btype="lowpass", output="sos")
    if high is None:
        return sps.butter(FILTER_ORDER, low / nyquist, btype="highpass", output="sos")
    return sps.butter(FILTER_ORDER, [low / nyquist, high / nyquist], btype="bandpass", output="sos")


def bandpass(
    signal: SampledSignal, low_hz: float | None, high_hz: float | None
) -> SampledSignal:
    """Zero-phase Butterworth filter (order 4, applied forward and backward).

    ``low_hz`` of 0/None degrades to a low-pass, ``high_hz`` of None to a
    high-pass. Output length and metadata match the input.
    """
    sos = _design(low_hz, high_hz, signal.sample_rate)
    n = len(signal.values)
    default_pad = 3 * (2 * len(sos) + 1)
    padlen = min(default_pad, max(n - 1, 0))
    filtered = sps.sosfiltfilt(sos, signal.values, padlen=padlen)
    return signal.replace_values(filtered)


@dataclass(frozen=True)
class EegBands:
    delta: SampledSignal
    theta: SampledSignal
    alpha: SampledSignal
    beta: SampledSignal
    gamma: SampledSignal

    def as_dict(self) -> dict[str, SampledSignal]:
        return {name: getattr(self, name) for name in EEG_BANDS}


def eeg_band_split(eeg: SampledSignal) -> EegBands:
    """Split raw EEG into the five canonical bands (filtered copies)."""
    if eeg.channel_kind is not ChannelKind.EEG_RAW:
        raise ValueError(f"expected EEG_RAW, got {eeg.channel_kind.value}")
    parts = {name: bandpass(eeg, lo, hi) for name, (lo, hi) in EEG_BANDS.items()}
    return EegBands(**parts)
