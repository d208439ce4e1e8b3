"""Reconstruct the task display schedule and slice per-task signal windows.

Task start times are not recorded; they are derived from the experiment
start time and the fixed display durations (60 s for code, 30 s for prose),
with a 10 s fixation gap inserted between experiment runs. Only answered
tasks yield windows: each window spans from the task's scheduled start to
the answer timestamp.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .errors import EmptyWindowError, ScheduleError
from .ingest import Answer, SampledSignal, Session, TaskKind

log = logging.getLogger(__name__)

DISPLAY_SECONDS = {TaskKind.CODE: 60.0, TaskKind.PROSE: 30.0}
FIXATION_SECONDS = 10.0
DURATION_SLACK = 0.5


@dataclass(frozen=True)
class TaskWindow:
    task_id: str
    kind: TaskKind
    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


def compute_task_windows(session: Session) -> list[TaskWindow]:
    """Derive one window per answered task from the display schedule.

    The first task starts at t_start_experiment; each later task starts
    when the previous task's display time elapses, plus the fixation gap
    whenever the run index increments. Answers that precede their task's
    scheduled start are dropped with a warning; answers beyond the display
    time are capped at the nominal duration plus 0.5 s slack.
    """
    windows: list[TaskWindow] = []
    t = session.t_start_experiment
    previous = None
    for event in session.events:
        if previous is not None:
            if (event.session_index, event.position_in_session) <= (
                previous.session_index,
                previous.position_in_session,
            ):
                raise ScheduleError(
                    f"events out of order: {previous.task_id!r} then {event.task_id!r}"
                )
            if event.session_index < previous.session_index:
                raise ScheduleError(f"run index decreases at {event.task_id!r}")
            t += DISPLAY_SECONDS[previous.kind]
            if event.session_index > previous.session_index:
                t += FIXATION_SECONDS
        previous = event
        if event.answer is Answer.NONE:
            continue
        t_end = event.t_answer
        if t_end <= t:
            log.warning(
                "task %s: answer at %g precedes scheduled start %g; window dropped",
                event.task_id, t_end, t,
            )
            continue
        cap = t + DISPLAY_SECONDS[event.kind] + DURATION_SLACK
        if t_end > cap:
            log.warning(
                "task %s: answer at %g exceeds display time; capped at %g",
                event.task_id, t_end, cap,
            )
            t_end = cap
        windows.append(TaskWindow(task_id=event.task_id, kind=event.kind, t_start=t, t_end=t_end))
    return windows


def slice_signal(signal: SampledSignal, window: TaskWindow) -> SampledSignal:
    """Samples with timestamps in [t_start, t_end], both ends inclusive."""
    return slice_interval(signal, window.t_start, window.t_end)


def slice_interval(signal: SampledSignal, t_start: float, t_end: float) -> SampledSignal:
    rate = signal.sample_rate
    lo = math.ceil((t_start - signal.start_time) * rate - 1e-9)
    hi = math.floor((t_end - signal.start_time) * rate + 1e-9)
    lo = max(lo, 0)
    hi = min(hi, len(signal.values) - 1)
    if hi < lo:
        raise EmptyWindowError(
            f"window [{t_start}, {t_end}] does not intersect "
            f"{signal.channel_kind.value} extent [{signal.start_time}, {signal.end_time}]"
        )
    return SampledSignal(
        channel_kind=signal.channel_kind,
        sample_rate=rate,
        start_time=signal.start_time + lo / rate,
        values=signal.values[lo : hi + 1],
    )
