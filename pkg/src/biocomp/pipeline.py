"""Corpus-level orchestration: sessions in, per-configuration matrices out.

Per session: compute baseline statistics, Z-score the physiological
channels against them, band-filter EEG and BVP, decompose EDA once over
the whole recording, derive task windows from the schedule, and extract
every computable feature group per window. Configuration matrices are
column subsets of those rows, so the expensive signal work happens once
however many configurations are requested.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

from .cvxeda import CvxEdaParams, decompose_eda
from .errors import MissingChannelError
from .features import (
    FeatureMatrix,
    PeakParams,
    SignalConfig,
    eda_features,
    eeg_features,
    heart_features,
    impute,
    matrix_from_rows,
)
from .ingest import ChannelKind, Session, load_session
from .preprocess import BVP_BAND, bandpass, baseline_stats, eeg_band_split, zscore
from .segment import compute_task_windows, slice_interval, slice_signal

log = logging.getLogger(__name__)

GROUP_CHANNELS = {
    "EEG": {ChannelKind.EEG_RAW, ChannelKind.ATTENTION, ChannelKind.MEDITATION},
    "EDA": {ChannelKind.EDA},
    "HEART": {ChannelKind.BVP},
}


def load_corpus(root: str | Path) -> list[Session]:
    """Load every session directory under ``root``, sorted by path name."""
    root = Path(root)
    directories = sorted(p for p in root.iterdir() if p.is_dir())
    if not directories:
        raise MissingChannelError(f"{root}: no session directories found")
    return [load_session(d) for d in directories]


@dataclass
class SessionRows:
    participant_id: str
    groups: frozenset[str]
    rows: list[dict] = field(default_factory=list)


def prepare_session(
    session: Session,
    cvx_params: CvxEdaParams | None = None,
    peak_params: PeakParams | None = None,
) -> SessionRows:
    """All per-window features available from this session's channels."""
    cvx_params = cvx_params or CvxEdaParams()
    peak_params = peak_params or PeakParams()
    pid = session.participant.id
    stats = baseline_stats(session)
    windows = compute_task_windows(session)
    if not windows:
        log.warning("session %s: no usable task windows", pid)

    groups = frozenset(
        name
        for name, needed in GROUP_CHANNELS.items()
        if needed.issubset(session.channels.keys())
    )

    bands = attention = meditation = None
    decomposition = bvp_filtered = baseline_bvp = None
    if "EEG" in groups:
        bands = eeg_band_split(zscore(session.channels[ChannelKind.EEG_RAW], stats))
        attention = session.channels[ChannelKind.ATTENTION]
        meditation = session.channels[ChannelKind.MEDITATION]
    if "EDA" in groups:
        decomposition = decompose_eda(zscore(session.channels[ChannelKind.EDA], stats), cvx_params)
    if "HEART" in groups:
        bvp_filtered = bandpass(zscore(session.channels[ChannelKind.BVP], stats), *BVP_BAND)
        baseline_bvp = slice_interval(bvp_filtered, stats.window_start, stats.window_end)

    out = SessionRows(participant_id=pid, groups=groups)
    for window in windows:
        features: dict[str, float] = {}
        if "EEG" in groups:
            band_slices = {
                name: slice_signal(sig, window).values
                for name, sig in bands.as_dict().items()
            }
            features.update(
                eeg_features(
                    band_slices,
                    slice_signal(attention, window).values,
                    slice_signal(meditation, window).values,
                    stats,
                )
            )
        if "EDA" in groups:
            features.update(
                eda_features(
                    slice_signal(decomposition.tonic, window),
                    slice_signal(decomposition.phasic, window),
                    peak_params,
                )
            )
        if "HEART" in groups:
            features.update(
                heart_features(slice_signal(bvp_filtered, window), baseline_bvp, peak_params)
            )
        out.rows.append(
            {
                "participant_id": pid,
                "task_id": window.task_id,
                "label": window.kind.value,
                "features": features,
            }
        )
    return out


def prepare_corpus(
    corpus: list[Session],
    cvx_params: CvxEdaParams | None = None,
    peak_params: PeakParams | None = None,
    jobs: int = 1,
) -> list[SessionRows]:
    ordered = sorted(corpus, key=lambda s: s.participant.id)
    if jobs and jobs > 1:
        try:
            from joblib import Parallel, delayed
        except ImportError:
            pass
        else:
            return Parallel(n_jobs=jobs)(
                delayed(prepare_session)(s, cvx_params, peak_params) for s in ordered
            )
    return [prepare_session(s, cvx_params, peak_params) for s in ordered]


def matrix_for_config(prepared: list[SessionRows], config: SignalConfig) -> FeatureMatrix:
    """Column-subset the prepared rows for one configuration and impute."""
    missing = [
        p.participant_id for p in prepared if not set(config.groups).issubset(p.groups)
    ]
    if missing:
        raise MissingChannelError(
            f"configuration {config.name} needs channels absent from session(s): "
            + ", ".join(missing)
        )
    rows = [row for p in prepared for row in p.rows]
    return impute(matrix_from_rows(rows, config.registry))


def build_matrix(
    corpus: list[Session],
    config: SignalConfig,
    cvx_params: CvxEdaParams | None = None,
    peak_params: PeakParams | None = None,
) -> FeatureMatrix:
    """One labeled row per answered task, columns in registry order."""
    return matrix_for_config(prepare_corpus(corpus, cvx_params, peak_params), config)


def build_matrices(
    corpus: list[Session],
    configs: list[SignalConfig],
    cvx_params: CvxEdaParams | None = None,
    peak_params: PeakParams | None = None,
    jobs: int = 1,
) -> dict[str, FeatureMatrix]:
    prepared = prepare_corpus(corpus, cvx_params, peak_params, jobs=jobs)
    return {c.name: matrix_for_config(prepared, c) for c in configs}
