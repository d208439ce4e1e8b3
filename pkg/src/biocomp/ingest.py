"""On-disk session format: headerized channel files plus a JSON event manifest.

A session directory holds one ``<KIND>.csv`` file per recorded channel
(line 1 start epoch, line 2 sample rate in Hz, then one sample per line)
and a ``manifest.json`` describing the participant, the calibration
window, and the ordered task events.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    EmptyChannelError,
    FormatError,
    ManifestError,
    MissingChannelError,
)

log = logging.getLogger(__name__)


class ChannelKind(str, Enum):
    EDA = "EDA"
    BVP = "BVP"
    EEG_RAW = "EEG_RAW"
    ATTENTION = "ATTENTION"
    MEDITATION = "MEDITATION"


#: Sampling rates the recording devices nominally deliver. A deviation in a
#: loaded file is reported as a warning, not an error.
NOMINAL_RATES = {
    ChannelKind.EDA: 4.0,
    ChannelKind.BVP: 64.0,
    ChannelKind.EEG_RAW: 512.0,
    ChannelKind.ATTENTION: 1.0,
    ChannelKind.MEDITATION: 1.0,
}

CHANNEL_FILENAMES = {kind: f"{kind.value}.csv" for kind in ChannelKind}


class TaskKind(str, Enum):
    CODE = "CODE"
    PROSE = "PROSE"


class Answer(str, Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"
    NONE = "NONE"


@dataclass(frozen=True)
class SampledSignal:
    """A uniformly sampled channel. Sample ``i`` is at ``start_time + i/sample_rate``."""

    channel_kind: ChannelKind
    sample_rate: float
    start_time: float
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        if self.sample_rate <= 0:
            raise FormatError(f"sample rate must be positive, got {self.sample_rate}")

    def __len__(self):
        return len(self.values)

    @property
    def duration(self) -> float:
        return (len(self.values) - 1) / self.sample_rate if len(self.values) else 0.0

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration

    def timestamps(self) -> np.ndarray:
        return self.start_time + np.arange(len(self.values)) / self.sample_rate

    def replace_values(self, values: np.ndarray) -> "SampledSignal":
        return SampledSignal(self.channel_kind, self.sample_rate, self.start_time, values)


@dataclass(frozen=True)
class Participant:
    id: str
    gpa: float | None = None
    meta: dict = field(default_factory=dict)


@dataclass(frozen=True)
class TaskEvent:
    task_id: str
    kind: TaskKind
    session_index: int
    position_in_session: int
    t_answer: float | None
    answer: Answer

    def __post_init__(self):
        if (self.answer is Answer.NONE) != (self.t_answer is None):
            raise ManifestError(
                f"task {self.task_id}: answer={self.answer.value} inconsistent "
                f"with t_answer={self.t_answer}"
            )
        if self.session_index < 1 or self.position_in_session < 1:
            raise ManifestError(f"task {self.task_id}: indices must be >= 1")


@dataclass(frozen=True)
class Session:
    participant: Participant
    t_start_experiment: float
    baseline_start: float
    baseline_end: float
    channels: dict[ChannelKind, SampledSignal]
    events: tuple[TaskEvent, ...]

    @property
    def n_runs(self) -> int:
        return max((e.session_index for e in self.events), default=0)

    def answered_events(self) -> list[TaskEvent]:
        return [e for e in self.events if e.answer is not Answer.NONE]


def _parse_number(text: str, what: str, line_no: int, path) -> float:
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"{path}: line {line_no}: {what} is not numeric: {text!r}") from None
    if not math.isfinite(value):
        raise FormatError(f"{path}: line {line_no}: {what} is not finite: {text!r}")
    return value


def load_channel(path: str | Path, kind: ChannelKind) -> SampledSignal:
    """Parse one channel file.

    Raises FormatError on a malformed header or a non-numeric/non-finite
    sample (the message names the offending line), EmptyChannelError when
    the header is valid but no samples follow.
    """
    path = Path(path)
    lines = path.read_text().splitlines()
    if len(lines) < 2:
        raise FormatError(f"{path}: expected a 2-line header (start epoch, rate)")
    start_time = _parse_number(lines[0].strip(), "start epoch", 1, path)
    rate = _parse_number(lines[1].strip(), "sample rate", 2, path)
    if rate <= 0:
        raise FormatError(f"{path}: sample rate must be positive, got {rate}")
    body = [ln.strip() for ln in lines[2:] if ln.strip()]
    if not body:
        raise EmptyChannelError(f"{path}: channel has no samples")
    try:
        values = np.array(body, dtype=float)
    except ValueError:
        # locate the first bad line for the error message
        for i, token in enumerate(body):
            try:
                float(token)
            except ValueError:
                raise FormatError(
                    f"{path}: line {i + 3}: sample is not numeric: {token!r}"
                ) from None
        raise
    if not np.isfinite(values).all():
        bad = int(np.flatnonzero(~np.isfinite(values))[0])
        raise FormatError(f"{path}: line {bad + 3}: sample is not finite")
    nominal = NOMINAL_RATES[kind]
    if not math.isclose(rate, nominal, rel_tol=1e-9):
        log.warning("%s: %s sampled at %g Hz (nominal %g Hz)", path, kind.value, rate, nominal)
    return SampledSignal(kind, rate, start_time, values)


def _require(manifest: dict, key: str, path: Path):
    if key not in manifest:
        raise ManifestError(f"{path}: missing key {key!r}")
    return manifest[key]


def load_session(directory: str | Path) -> Session:
    """Load a full session directory (manifest plus its channel files)."""
    directory = Path(directory)
    manifest_path = directory / "manifest.json"
    if not manifest_path.is_file():
        raise ManifestError(f"{directory}: manifest.json not found")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{manifest_path}: invalid JSON: {exc}") from None

    raw_participant = _require(manifest, "participant", manifest_path)
    participant = Participant(
        id=str(_require(raw_participant, "id", manifest_path)),
        gpa=raw_participant.get("gpa"),
    )
    if participant.gpa is not None and not 0.0 <= participant.gpa <= 4.0:
        raise ManifestError(f"{manifest_path}: gpa {participant.gpa} outside [0, 4]")

    t_start = float(_require(manifest, "t_start_experiment", manifest_path))
    baseline = _require(manifest, "baseline", manifest_path)
    b_start = float(_require(baseline, "start", manifest_path))
    b_end = float(_require(baseline, "end", manifest_path))
    if b_end < b_start:
        raise ManifestError(f"{manifest_path}: baseline end precedes baseline start")
    if t_start < b_end:
        raise ManifestError(
            f"{manifest_path}: t_start_experiment {t_start} precedes baseline end {b_end}"
        )

    events = []
    seen_ids = set()
    for raw in _require(manifest, "events", manifest_path):
        task_id = str(_require(raw, "task_id", manifest_path))
        if task_id in seen_ids:
            raise ManifestError(f"{manifest_path}: duplicate task_id {task_id!r}")
        seen_ids.add(task_id)
        try:
            kind = TaskKind(str(_require(raw, "kind", manifest_path)).upper())
            answer = Answer(str(raw.get("answer", "NONE")).upper())
        except ValueError as exc:
            raise ManifestError(f"{manifest_path}: task {task_id}: {exc}") from None
        t_answer = raw.get("t_answer")
        events.append(
            TaskEvent(
                task_id=task_id,
                kind=kind,
                session_index=int(_require(raw, "session_index", manifest_path)),
                position_in_session=int(_require(raw, "position_in_session", manifest_path)),
                t_answer=None if t_answer is None else float(t_answer),
                answer=answer,
            )
        )
    order = [(e.session_index, e.position_in_session) for e in events]
    if len(set(order)) != len(order):
        raise ManifestError(f"{manifest_path}: duplicate (session_index, position_in_session)")
    events.sort(key=lambda e: (e.session_index, e.position_in_session))

    channels: dict[ChannelKind, SampledSignal] = {}
    for name in manifest.get("channels", []):
        try:
            kind = ChannelKind(str(name).upper())
        except ValueError:
            raise ManifestError(f"{manifest_path}: unknown channel kind {name!r}") from None
        channel_path = directory / CHANNEL_FILENAMES[kind]
        if not channel_path.is_file():
            raise MissingChannelError(f"{directory}: declared channel file {channel_path.name} absent")
        channels[kind] = load_channel(channel_path, kind)

    return Session(
        participant=participant,
        t_start_experiment=t_start,
        baseline_start=b_start,
        baseline_end=b_end,
        channels=channels,
        events=tuple(events),
    )


@dataclass
class SessionReport:
    path: str
    participant_id: str | None
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)


@dataclass
class ValidationReport:
    sessions: list[SessionReport]

    @property
    def analyzable(self) -> bool:
        return any(not s.errors for s in self.sessions)

    @property
    def n_errors(self) -> int:
        return sum(len(s.errors) for s in self.sessions)

    def to_dict(self) -> dict:
        return {
            "analyzable": self.analyzable,
            "n_sessions": len(self.sessions),
            "n_errors": self.n_errors,
            "sessions": [
                {
                    "path": s.path,
                    "participant_id": s.participant_id,
                    "errors": s.errors,
                    "warnings": s.warnings,
                }
                for s in self.sessions
            ],
        }


def validate_corpus(root: str | Path) -> ValidationReport:
    """Structurally check every session under ``root``.

    Problems are report content, not exceptions: a corpus is analyzable
    iff at least one session loads without errors.
    """
    root = Path(root)
    reports: list[SessionReport] = []
    for directory in sorted(p for p in root.iterdir() if p.is_dir()):
        entry = SessionReport(path=str(directory), participant_id=None)
        reports.append(entry)
        try:
            session = load_session(directory)
        except Exception as exc:  # noqa: BLE001 - every load failure is report content
            entry.errors.append(f"{type(exc).__name__}: {exc}")
            continue
        entry.participant_id = session.participant.id

        for kind, signal in session.channels.items():
            nominal = NOMINAL_RATES[kind]
            if not math.isclose(signal.sample_rate, nominal, rel_tol=1e-9):
                entry.warnings.append(
                    f"{kind.value}: rate {signal.sample_rate:g} Hz deviates from nominal {nominal:g} Hz"
                )
        missing = [k.value for k in ChannelKind if k not in session.channels]
        if missing:
            entry.warnings.append("channels absent: " + ", ".join(missing))

        n_answered = len(session.answered_events())
        n_unanswered = len(session.events) - n_answered
        if n_unanswered:
            entry.warnings.append(f"{n_unanswered} unanswered task(s)")
        if session.events and n_answered == 0:
            entry.warnings.append("no usable windows: every task is unanswered")

        for kind, signal in session.channels.items():
            if signal.start_time > session.baseline_end - 30.0:
                entry.errors.append(
                    f"{kind.value}: does not cover the 30 s baseline window"
                )
    return ValidationReport(sessions=reports)
