import numpy as np
import pytest

from biocomp.ingest import (
    Answer,
    ChannelKind,
    Participant,
    SampledSignal,
    Session,
    TaskEvent,
    TaskKind,
)


def make_signal(kind=ChannelKind.EDA, rate=4.0, start=0.0, values=()):
    return SampledSignal(
        channel_kind=kind, sample_rate=rate, start_time=start, values=np.asarray(values, float)
    )


def make_event(task_id, kind, run, pos, t_answer=None, answer=None):
    if answer is None:
        answer = Answer.NONE if t_answer is None else Answer.ACCEPT
    return TaskEvent(
        task_id=task_id,
        kind=kind,
        session_index=run,
        position_in_session=pos,
        t_answer=t_answer,
        answer=answer,
    )


def make_session(events, channels=None, t_start=1000.0, baseline_end=None, pid="P01", gpa=3.0):
    baseline_end = t_start if baseline_end is None else baseline_end
    return Session(
        participant=Participant(id=pid, gpa=gpa),
        t_start_experiment=t_start,
        baseline_start=baseline_end - 120.0,
        baseline_end=baseline_end,
        channels=channels or {},
        events=tuple(events),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


__all__ = ["make_signal", "make_event", "make_session", "TaskKind", "Answer", "ChannelKind"]
