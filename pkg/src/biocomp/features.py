"""Per-task-window features, grouped by signal, and the labeled feature matrix.

Three feature groups: brain (band powers, band-power ratios, attention and
meditation summaries), skin (tonic level and phasic response shape), and
heart (pulse amplitudes, rate shifts, and beat-to-beat variability). A
signal configuration selects one or more groups; its feature registry is
the concatenation of the member groups' registries in a fixed order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import FeatureError, ImputationError
from .ingest import ChannelKind, SampledSignal
from .peaks import detect_peaks
from .preprocess import EEG_BANDS, BaselineStats

RATIO_EPS = 1e-12

BAND_NAMES = tuple(EEG_BANDS)

EEG_FEATURES = tuple(
    [f"eeg_power_{b}" for b in BAND_NAMES]
    + [f"eeg_ratio_{a}_{b}" for a in BAND_NAMES for b in BAND_NAMES if a != b]
    + [
        "attention_min",
        "attention_max",
        "attention_mean_diff",
        "meditation_min",
        "meditation_max",
        "meditation_mean_diff",
    ]
)

EDA_FEATURES = (
    "eda_tonic_mean",
    "eda_phasic_auc",
    "eda_scr_amp_min",
    "eda_scr_amp_max",
    "eda_scr_amp_mean",
    "eda_scr_amp_sum",
)

HEART_FEATURES = (
    "bvp_amp_min",
    "bvp_amp_max",
    "bvp_amp_mean",
    "bvp_amp_sum",
    "bvp_amp_mean_diff",
    "hr_mean_diff",
    "hr_var_diff",
    "hrv_sdnn",
    "hrv_rmssd",
)

#: Features allowed to be missing before imputation (too few pulse peaks).
IMPUTABLE_FEATURES = frozenset({"hrv_sdnn", "hrv_rmssd", "hr_mean_diff", "hr_var_diff"})

GROUP_REGISTRY = {"EEG": EEG_FEATURES, "EDA": EDA_FEATURES, "HEART": HEART_FEATURES}
GROUP_ORDER = ("EEG", "EDA", "HEART")

GROUP_CHANNELS = {
    "EEG": (ChannelKind.EEG_RAW, ChannelKind.ATTENTION, ChannelKind.MEDITATION),
    "EDA": (ChannelKind.EDA,),
    "HEART": (ChannelKind.BVP,),
}


@dataclass(frozen=True)
class SignalConfig:
    """One of the seven signal-group combinations."""

    groups: tuple[str, ...]

    def __post_init__(self):
        unknown = [g for g in self.groups if g not in GROUP_REGISTRY]
        if unknown:
            raise ValueError(f"unknown signal group(s): {unknown}")
        ordered = tuple(g for g in GROUP_ORDER if g in self.groups)
        if ordered != self.groups or len(set(self.groups)) != len(self.groups):
            object.__setattr__(self, "groups", ordered)
        if not self.groups:
            raise ValueError("a signal configuration needs at least one group")

    @classmethod
    def parse(cls, text: str) -> "SignalConfig":
        return cls(tuple(part.strip().upper() for part in text.split("+") if part.strip()))

    @property
    def name(self) -> str:
        return "+".join(self.groups)

    @property
    def registry(self) -> tuple[str, ...]:
        names: list[str] = []
        for group in self.groups:
            names.extend(GROUP_REGISTRY[group])
        return tuple(names)

    @property
    def required_channels(self) -> tuple[ChannelKind, ...]:
        kinds: list[ChannelKind] = []
        for group in self.groups:
            kinds.extend(GROUP_CHANNELS[group])
        return tuple(kinds)

    def __str__(self) -> str:
        return self.name


ALL_SIGNAL_CONFIGS = tuple(
    SignalConfig.parse(name)
    for name in ("EEG", "EDA", "HEART", "EEG+EDA", "EEG+HEART", "EDA+HEART", "EEG+EDA+HEART")
)


@dataclass(frozen=True)
class PeakParams:
    """Detector thresholds; amplitudes are in baseline-normalized units."""

    bvp_min_distance_s: float = 0.33   # >= 0.33 s between beats (<= ~180 bpm)
    bvp_prominence_scale: float = 0.5  # times the window's standard deviation
    scr_min_distance_s: float = 1.0
    scr_min_prominence: float = 0.01

    @classmethod
    def from_dict(cls, raw: dict) -> "PeakParams":
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in raw.items() if k in known})


def _check_window(values: np.ndarray, what: str):
    if len(values) == 0:
        raise FeatureError(f"empty {what} window")


def band_power(values: np.ndarray) -> float:
    """Mean squared amplitude of a band-filtered window."""
    return float(np.mean(np.square(values)))


def eeg_features(
    band_windows: dict[str, np.ndarray],
    attention_window: np.ndarray,
    meditation_window: np.ndarray,
    stats: BaselineStats,
) -> dict[str, float]:
    """31 brain features for one task window.

    Band powers come from the band-filtered window slices; the 20 ordered
    power ratios use a small epsilon in the denominator so an all-zero
    window yields zero ratios. Attention and meditation are the raw 0-100
    device streams; their means are differenced against the baseline means.
    """
    for name in BAND_NAMES:
        _check_window(band_windows[name], f"EEG {name}")
    _check_window(attention_window, "attention")
    _check_window(meditation_window, "meditation")

    powers = {name: band_power(band_windows[name]) for name in BAND_NAMES}
    out: dict[str, float] = {f"eeg_power_{b}": powers[b] for b in BAND_NAMES}
    for a in BAND_NAMES:
        for b in BAND_NAMES:
            if a != b:
                out[f"eeg_ratio_{a}_{b}"] = powers[a] / (powers[b] + RATIO_EPS)
    for label, window, kind in (
        ("attention", attention_window, ChannelKind.ATTENTION),
        ("meditation", meditation_window, ChannelKind.MEDITATION),
    ):
        out[f"{label}_min"] = float(np.min(window))
        out[f"{label}_max"] = float(np.max(window))
        out[f"{label}_mean_diff"] = float(np.mean(window)) - stats[kind].mean
    return out


def eda_features(
    tonic_window: SampledSignal,
    phasic_window: SampledSignal,
    params: PeakParams | None = None,
) -> dict[str, float]:
    """6 skin features: mean tonic level, phasic area, and phasic peak stats."""
    params = params or PeakParams()
    _check_window(tonic_window.values, "tonic")
    _check_window(phasic_window.values, "phasic")
    peaks = detect_peaks(phasic_window, params.scr_min_distance_s, params.scr_min_prominence)
    amps = np.array([p.amplitude for p in peaks])
    return {
        "eda_tonic_mean": float(np.mean(tonic_window.values)),
        "eda_phasic_auc": float(
            np.trapezoid(phasic_window.values, dx=1.0 / phasic_window.sample_rate)
        ),
        "eda_scr_amp_min": float(amps.min()) if len(amps) else 0.0,
        "eda_scr_amp_max": float(amps.max()) if len(amps) else 0.0,
        "eda_scr_amp_mean": float(amps.mean()) if len(amps) else 0.0,
        "eda_scr_amp_sum": float(amps.sum()) if len(amps) else 0.0,
    }


def _pulse_stats(window: SampledSignal, params: PeakParams):
    """Peak amplitudes, instantaneous heart rates, and inter-beat intervals."""
    prominence = params.bvp_prominence_scale * float(np.std(window.values))
    peaks = detect_peaks(window, params.bvp_min_distance_s, prominence)
    amps = np.array([p.amplitude for p in peaks])
    times = np.array([p.index for p in peaks]) / window.sample_rate
    ibis = np.diff(times)
    rates = 60.0 / ibis if len(ibis) else np.array([])
    return amps, rates, ibis


def heart_features(
    bvp_window: SampledSignal,
    baseline_window: SampledSignal,
    params: PeakParams | None = None,
) -> dict[str, float]:
    """9 heart features for one task window of band-filtered BVP.

    Differences are task minus baseline, with the baseline side run through
    the identical pulse pipeline. Variability metrics degrade to missing
    (NaN) when the window holds too few beats: fewer than 3 peaks leaves
    SDNN/RMSSD undefined, fewer than 2 also the heart-rate differences.
    """
    params = params or PeakParams()
    _check_window(bvp_window.values, "BVP")
    _check_window(baseline_window.values, "baseline BVP")
    amps, rates, ibis = _pulse_stats(bvp_window, params)
    b_amps, b_rates, _ = _pulse_stats(baseline_window, params)

    out = {
        "bvp_amp_min": float(amps.min()) if len(amps) else 0.0,
        "bvp_amp_max": float(amps.max()) if len(amps) else 0.0,
        "bvp_amp_mean": float(amps.mean()) if len(amps) else 0.0,
        "bvp_amp_sum": float(amps.sum()) if len(amps) else 0.0,
    }
    b_amp_mean = float(b_amps.mean()) if len(b_amps) else 0.0
    out["bvp_amp_mean_diff"] = out["bvp_amp_mean"] - b_amp_mean

    if len(rates) >= 1 and len(b_rates) >= 1:
        out["hr_mean_diff"] = float(rates.mean() - b_rates.mean())
        out["hr_var_diff"] = float(rates.var() - b_rates.var())
    else:
        out["hr_mean_diff"] = math.nan
        out["hr_var_diff"] = math.nan
    if len(ibis) >= 2:
        out["hrv_sdnn"] = float(np.std(ibis, ddof=1))
        out["hrv_rmssd"] = float(np.sqrt(np.mean(np.square(np.diff(ibis)))))
    else:
        out["hrv_sdnn"] = math.nan
        out["hrv_rmssd"] = math.nan
    return out


@dataclass
class FeatureMatrix:
    """Labeled rows of named real features for one signal configuration."""

    feature_names: tuple[str, ...]
    participant_ids: np.ndarray
    task_ids: np.ndarray
    labels: np.ndarray  # "CODE" / "PROSE"
    values: np.ndarray  # (n_rows, n_features) float, NaN marks missing

    def __post_init__(self):
        self.participant_ids = np.asarray(self.participant_ids, dtype=object)
        self.task_ids = np.asarray(self.task_ids, dtype=object)
        self.labels = np.asarray(self.labels, dtype=object)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.participant_ids), len(self.feature_names)):
            raise ValueError("value block shape does not match ids/registry")

    @property
    def n_rows(self) -> int:
        return len(self.participant_ids)

    def class_vector(self) -> np.ndarray:
        """1 for CODE (the positive class), 0 for PROSE."""
        return (self.labels == "CODE").astype(int)

    def rows_for(self, participant_ids) -> np.ndarray:
        wanted = set(participant_ids)
        return np.array([pid in wanted for pid in self.participant_ids])

    def subset(self, mask: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            self.feature_names,
            self.participant_ids[mask],
            self.task_ids[mask],
            self.labels[mask],
            self.values[mask],
        )

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["participant_id", "task_id", "label", *self.feature_names])
            for i in range(self.n_rows):
                writer.writerow(
                    [self.participant_ids[i], self.task_ids[i], self.labels[i]]
                    + [repr(v) for v in self.values[i]]
                )


def matrix_from_rows(rows: list[dict], registry: tuple[str, ...]) -> FeatureMatrix:
    """Assemble a matrix from per-task dicts carrying ids, label, and features."""
    values = np.full((len(rows), len(registry)), math.nan)
    for i, row in enumerate(rows):
        for j, name in enumerate(registry):
            values[i, j] = row["features"][name]
    return FeatureMatrix(
        feature_names=tuple(registry),
        participant_ids=np.array([r["participant_id"] for r in rows], dtype=object),
        task_ids=np.array([r["task_id"] for r in rows], dtype=object),
        labels=np.array([r["label"] for r in rows], dtype=object),
        values=values,
    )


def impute(matrix: FeatureMatrix) -> FeatureMatrix:
    """Replace missing values with per-participant, per-task-kind medians.

    The median is taken over the participant's other tasks of the same kind;
    if none carry the feature, the global median over that kind steps in.
    Rows and columns are unchanged. Raises ImputationError when a feature is
    missing for every row of a kind, and ValueError if a non-imputable
    feature holds a missing value.
    """
    values = matrix.values.copy()
    for j, name in enumerate(matrix.feature_names):
        col = values[:, j]
        missing = np.isnan(col)
        if not missing.any():
            continue
        if name not in IMPUTABLE_FEATURES:
            raise ValueError(f"feature {name!r} must not contain missing values")
        for kind in ("CODE", "PROSE"):
            kind_mask = matrix.labels == kind
            kind_missing = missing & kind_mask
            if not kind_missing.any():
                continue
            global_pool = col[kind_mask & ~missing]
            for i in np.flatnonzero(kind_missing):
                own = kind_mask & ~missing & (matrix.participant_ids == matrix.participant_ids[i])
                pool = col[own]
                if len(pool) == 0:
                    pool = global_pool
                if len(pool) == 0:
                    raise ImputationError(
                        f"feature {name!r} is missing for every {kind} task"
                    )
                values[i, j] = float(np.median(pool))
    return FeatureMatrix(
        matrix.feature_names,
        matrix.participant_ids,
        matrix.task_ids,
        matrix.labels,
        values,
    )
