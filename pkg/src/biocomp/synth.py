"""Synthetic session generator: the pipeline's ground-truth oracle.

Signals are planted at the raw-sample level (pulse trains, skin-conductance
responses, band-limited brain noise) so every downstream stage is exercised
end to end. Class effects live in per-task-kind profiles; making both
profiles equal yields a null corpus with no learnable signal, while
separated profiles yield a corpus any reasonable classifier nails.
Answer-delay distributions are shared between kinds so window duration
never leaks the label.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import SynthError
from .ingest import CHANNEL_FILENAMES, NOMINAL_RATES, ChannelKind, TaskKind

EPOCH_BASE = 1_600_000_000.0
TAIL_PAD_S = 5.0

# biexponential SCR kernel time constants (seconds)
SCR_TAU0 = 2.0
SCR_TAU1 = 0.7
SCR_KERNEL_S = 12.0

EEG_SYNTH_BANDS = {
    "delta": (0.5, 4.0),
    "theta": (4.0, 8.0),
    "alpha": (8.0, 12.0),
    "beta": (12.0, 30.0),
    "gamma": (30.0, 45.0),
}


@dataclass(frozen=True)
class ClassProfile:
    """Signal statistics for one task kind."""

    hr_bpm: float = 72.0
    hr_jitter_bpm: float = 2.0
    ibi_sd_s: float = 0.04
    scr_rate_per_min: float = 4.0
    scr_amp: float = 0.5
    band_weights: tuple[float, ...] = (0.30, 0.25, 0.20, 0.15, 0.10)
    attention_mean: float = 50.0

    def __post_init__(self):
        if self.hr_bpm <= 0 or self.ibi_sd_s < 0 or self.scr_rate_per_min < 0 or self.scr_amp < 0:
            raise SynthError("rates and amplitudes must be nonnegative")
        w = np.asarray(self.band_weights, dtype=float)
        if len(w) != 5 or (w < 0).any() or w.sum() <= 0:
            raise SynthError("band_weights must be 5 nonnegative values")
        object.__setattr__(self, "band_weights", tuple(w / w.sum()))


def blend_profiles(base: ClassProfile, target: ClassProfile, s: float) -> ClassProfile:
    """Linear interpolation between two profiles (s=0 -> base, s=1 -> target)."""
    kwargs = {}
    for f in fields(ClassProfile):
        a = getattr(base, f.name)
        b = getattr(target, f.name)
        if isinstance(a, tuple):
            kwargs[f.name] = tuple(
                (1.0 - s) * av + s * bv for av, bv in zip(a, b)
            )
        else:
            kwargs[f.name] = (1.0 - s) * a + s * b
    return ClassProfile(**kwargs)


@dataclass(frozen=True)
class ProfileSet:
    code: ClassProfile
    prose: ClassProfile
    rest: ClassProfile | None = None

    def resting(self) -> ClassProfile:
        return self.rest if self.rest is not None else self.prose

    def for_kind(self, kind: TaskKind) -> ClassProfile:
        return self.code if kind is TaskKind.CODE else self.prose


def null_profiles() -> ProfileSet:
    """Identical statistics for both kinds: no class signal anywhere."""
    p = ClassProfile()
    return ProfileSet(code=p, prose=p)


def separable_profiles() -> ProfileSet:
    """Strong planted effects, dominated by the heart channel."""
    prose = ClassProfile()
    code = replace(
        prose,
        hr_bpm=prose.hr_bpm + 10.0,
        ibi_sd_s=prose.ibi_sd_s / 2.0,
        scr_rate_per_min=prose.scr_rate_per_min * 2.5,
        scr_amp=prose.scr_amp * 1.8,
        band_weights=(0.15, 0.15, 0.15, 0.30, 0.25),
        attention_mean=70.0,
    )
    return ProfileSet(code=code, prose=prose)


@dataclass(frozen=True)
class ScheduleTemplate:
    """Shape of one recorded session."""

    n_runs: int = 3
    code_per_run: int = 3
    prose_per_run: int = 6
    baseline_s: float = 120.0
    answer_delay_s: tuple[float, float] = (10.0, 28.0)
    unanswered_prob: float = 0.0
    channels: tuple[ChannelKind, ...] = tuple(ChannelKind)

    def __post_init__(self):
        if self.baseline_s < 30.0:
            raise SynthError("baseline must cover the 30 s calibration window")
        lo, hi = self.answer_delay_s
        if not (0.0 < lo <= hi <= 30.0):
            raise SynthError("answer delays must fit the shorter (prose) display time")
        if not 0.0 <= self.unanswered_prob < 1.0:
            raise SynthError("unanswered_prob must be in [0, 1)")
        if self.n_runs < 1 or self.code_per_run < 0 or self.prose_per_run < 0:
            raise SynthError("schedule counts must be positive")
        object.__setattr__(
            self, "channels", tuple(ChannelKind(c) for c in self.channels)
        )


@dataclass(frozen=True)
class GpaModel:
    mean: float = 3.0
    sd: float = 0.25
    link_effects: bool = False
    link_floor: float = 0.05

    def draw(self, rng: np.random.Generator) -> float:
        return float(np.clip(rng.normal(self.mean, self.sd), 0.0, 4.0))

    def effect_scale(self, gpa: float) -> float:
        if not self.link_effects:
            return 1.0
        lo = self.mean - 2.0 * self.sd
        span = 4.0 * self.sd
        return float(np.clip((gpa - lo) / span, self.link_floor, 1.0))


# --- schedule ---------------------------------------------------------------

DISPLAY_S = {TaskKind.CODE: 60.0, TaskKind.PROSE: 30.0}
FIXATION_S = 10.0


def _build_events(template: ScheduleTemplate, rng: np.random.Generator):
    """Event dicts plus (start, end, kind) modulation segments, relative to t0."""
    events = []
    segments = []
    t = template.baseline_s  # t_start_experiment relative to channel start
    for run in range(1, template.n_runs + 1):
        kinds = [TaskKind.CODE] * template.code_per_run + [TaskKind.PROSE] * template.prose_per_run
        kinds = [kinds[i] for i in rng.permutation(len(kinds))]
        if run > 1:
            t += FIXATION_S
        for pos, kind in enumerate(kinds, start=1):
            answered = rng.random() >= template.unanswered_prob
            delay = rng.uniform(*template.answer_delay_s)
            t_answer = t + delay if answered else None
            events.append(
                {
                    "task_id": f"r{run}p{pos:02d}",
                    "kind": kind.value,
                    "session_index": run,
                    "position_in_session": pos,
                    "t_answer": t_answer,
                    "answer": str(rng.choice(["ACCEPT", "REJECT"])) if answered else "NONE",
                }
            )
            segments.append((t, t_answer if answered else t + DISPLAY_S[kind], kind))
            t += DISPLAY_S[kind]
    return events, segments, t


def _profile_at(t: float, segments, profiles: dict) -> ClassProfile:
    for start, end, kind in segments:
        if start <= t < end:
            return profiles[kind]
    return profiles["rest"]


# --- channel synthesizers ----------------------------------------------------


def pulse_train(duration_s: float, rate: float, segments, profiles, rng):
    """Raised-cosine pulse per beat; returns the signal and pulse peak times.

    Beat intervals are normal around the active profile's rate (truncated
    at 0.3 s); a per-segment rate offset adds slow wobble.
    """
    seg_jitter: dict[int, float] = {}
    beats = [0.0]
    t = 0.0
    while t < duration_s:
        prof = _profile_at(t, segments, profiles)
        key = _segment_key(t, segments)  # -1 pools every rest stretch
        if key not in seg_jitter:
            seg_jitter[key] = rng.normal(0.0, prof.hr_jitter_bpm)
        hr = max(prof.hr_bpm + seg_jitter[key], 20.0)
        ibi = max(rng.normal(60.0 / hr, prof.ibi_sd_s), 0.3)
        t += ibi
        beats.append(t)
    beats_arr = np.array(beats)
    n = int(round(duration_s * rate))
    ts = np.arange(n) / rate
    k = np.clip(np.searchsorted(beats_arr, ts, side="right") - 1, 0, len(beats_arr) - 2)
    ibi_k = beats_arr[k + 1] - beats_arr[k]
    phase = (ts - beats_arr[k]) / ibi_k
    values = 0.5 - 0.5 * np.cos(2.0 * np.pi * phase)
    peak_times = (beats_arr[:-1] + beats_arr[1:]) / 2.0
    return values, peak_times[peak_times < duration_s]


def _segment_key(t: float, segments) -> int:
    for i, (start, end, _) in enumerate(segments):
        if start <= t < end:
            return i
    return -1


def scr_kernel(rate: float) -> np.ndarray:
    tt = np.arange(0.0, SCR_KERNEL_S, 1.0 / rate)
    k = np.exp(-tt / SCR_TAU0) - np.exp(-tt / SCR_TAU1)
    return k / k.max()


def scr_peak_offset() -> float:
    """Time from SCR onset to kernel maximum."""
    return math.log(SCR_TAU0 / SCR_TAU1) / (1.0 / SCR_TAU1 - 1.0 / SCR_TAU0)


def eda_trace(duration_s: float, rate: float, segments, profiles, rng, noise_sd=0.01):
    """Slow tonic wander plus Poisson SCR events; returns signal and SCR peak times."""
    n = int(round(duration_s * rate))
    ts = np.arange(n) / rate
    knot_t = np.arange(0.0, duration_s + 10.0, 10.0)
    knots = np.cumsum(rng.normal(0.0, 0.05, len(knot_t)))
    values = 2.0 + np.interp(ts, knot_t, knots)

    kernel = scr_kernel(rate)
    all_segments = list(segments) + [(0.0, duration_s, None)]  # rest fills the gaps
    event_times = []
    for start, end, kind in all_segments:
        prof = profiles[kind] if kind is not None else profiles["rest"]
        span = max(end - start, 0.0)
        lam = prof.scr_rate_per_min * span / 60.0
        for _ in range(rng.poisson(lam)):
            onset = rng.uniform(start, end)
            if kind is None and _segment_key(onset, segments) >= 0:
                continue  # rest arrivals only outside task segments
            amp = prof.scr_amp * rng.uniform(0.6, 1.4)
            idx = int(round(onset * rate))
            if idx >= n:
                continue
            stop = min(n, idx + len(kernel))
            values[idx:stop] += amp * kernel[: stop - idx]
            event_times.append(onset + scr_peak_offset())
    values += rng.normal(0.0, noise_sd, n)
    return values, np.array(sorted(event_times))


def eeg_trace(duration_s: float, rate: float, segments, profiles, rng,
              scale: float = 10.0, waves_per_band: int = 6):
    """Sum of per-band sinusoid banks with task-modulated band envelopes."""
    n = int(round(duration_s * rate))
    ts = np.arange(n) / rate
    values = np.zeros(n)
    for b, (name, (lo, hi)) in enumerate(EEG_SYNTH_BANDS.items()):
        envelope = np.full(n, profiles["rest"].band_weights[b])
        for start, end, kind in segments:
            i0, i1 = int(start * rate), min(int(end * rate), n)
            envelope[i0:i1] = profiles[kind].band_weights[b]
        bank = np.zeros(n)
        amp = math.sqrt(2.0 / waves_per_band)
        for _ in range(waves_per_band):
            freq = rng.uniform(lo, min(hi, rate / 2.0 * 0.9))
            phase = rng.uniform(0.0, 2.0 * np.pi)
            bank += amp * np.sin(2.0 * np.pi * freq * ts + phase)
        values += np.sqrt(envelope) * bank
    return scale * values + rng.normal(0.0, 0.05 * scale, n)


def esense_trace(duration_s: float, rate: float, segments, profiles, rng,
                 rho: float = 0.9, sd: float = 3.0):
    """AR(1) around the active profile's attention mean, clipped to 0..100."""
    n = int(round(duration_s * rate))
    means = np.full(n, profiles["rest"].attention_mean)
    for start, end, kind in segments:
        i0, i1 = int(start * rate), min(int(end * rate), n)
        means[i0:i1] = profiles[kind].attention_mean
    values = np.empty(n)
    x = means[0] + rng.normal(0.0, sd)
    for i in range(n):
        x = means[i] + rho * (x - means[i]) + rng.normal(0.0, sd)
        values[i] = x
    return np.clip(values, 0.0, 100.0)


# --- writers ------------------------------------------------------------------


def write_channel(path: Path, start_time: float, rate: float, values: np.ndarray):
    with open(path, "w") as fh:
        fh.write(f"{start_time:.6f}\n{rate:g}\n")
        np.savetxt(fh, values, fmt="%.6g")


def generate_session(
    out_dir: str | Path,
    participant_id: str,
    profiles: ProfileSet,
    template: ScheduleTemplate | None = None,
    seed: int = 0,
    gpa: float | None = 3.0,
) -> dict:
    """Write one session directory (channels plus manifest); deterministic in seed."""
    template = template or ScheduleTemplate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(np.random.SeedSequence([0xB10C, seed & 0xFFFFFFFF]))

    events, segments, t_last = _build_events(template, rng)
    duration = t_last + TAIL_PAD_S
    prof_map = {
        TaskKind.CODE: profiles.code,
        TaskKind.PROSE: profiles.prose,
        "rest": profiles.resting(),
    }

    truth: dict = {}
    for kind in template.channels:
        rate = NOMINAL_RATES[kind]
        if kind is ChannelKind.BVP:
            values, peaks = pulse_train(duration, rate, segments, prof_map, rng)
            truth["bvp_peak_times"] = peaks
        elif kind is ChannelKind.EDA:
            values, scrs = eda_trace(duration, rate, segments, prof_map, rng)
            truth["scr_peak_times"] = scrs
        elif kind is ChannelKind.EEG_RAW:
            values = eeg_trace(duration, rate, segments, prof_map, rng)
        else:
            values = esense_trace(duration, rate, segments, prof_map, rng)
        write_channel(out_dir / CHANNEL_FILENAMES[kind], EPOCH_BASE, rate, values)

    manifest = {
        "participant": {"id": participant_id, "gpa": gpa},
        "t_start_experiment": EPOCH_BASE + template.baseline_s,
        "baseline": {"start": EPOCH_BASE, "end": EPOCH_BASE + template.baseline_s},
        "channels": [k.value for k in template.channels],
        "events": [
            {**e, "t_answer": None if e["t_answer"] is None else EPOCH_BASE + e["t_answer"]}
            for e in events
        ],
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    answered = sum(1 for e in events if e["answer"] != "NONE")
    return {
        "participant_id": participant_id,
        "n_events": len(events),
        "n_answered": answered,
        "duration_s": duration,
        "truth": truth,
    }


def generate_corpus(
    out_root: str | Path,
    n_participants: int = 28,
    profiles: ProfileSet | None = None,
    template: ScheduleTemplate | None = None,
    gpa_model: GpaModel | None = None,
    seed: int = 0,
) -> dict:
    """Write ``n_participants`` session directories under ``out_root``.

    GPAs come from the model's clipped normal; with ``link_effects`` on,
    each participant's code profile is pulled toward the prose profile in
    proportion to a GPA-derived scale, planting an expertise correlation.
    """
    if n_participants < 2:
        raise SynthError("a corpus needs at least two participants")
    profiles = profiles or separable_profiles()
    template = template or ScheduleTemplate()
    gpa_model = gpa_model or GpaModel()
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)

    gpa_rng = np.random.default_rng(np.random.SeedSequence([0x6BA, seed & 0xFFFFFFFF]))
    summaries = []
    for i in range(n_participants):
        pid = f"P{i + 1:02d}"
        gpa = gpa_model.draw(gpa_rng)
        scale = gpa_model.effect_scale(gpa)
        local = profiles
        if scale != 1.0:
            local = ProfileSet(
                code=blend_profiles(profiles.prose, profiles.code, scale),
                prose=profiles.prose,
                rest=profiles.rest,
            )
        summary = generate_session(
            out_root / pid, pid, local, template, seed=(seed * 1009 + i) & 0x7FFFFFFF, gpa=gpa,
        )
        summary["gpa"] = gpa
        summary.pop("truth", None)
        summaries.append(summary)
    return {
        "n_participants": n_participants,
        "n_events": sum(s["n_events"] for s in summaries),
        "n_answered": sum(s["n_answered"] for s in summaries),
        "participants": summaries,
    }
