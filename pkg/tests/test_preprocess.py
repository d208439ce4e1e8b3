import numpy as np
import pytest

from biocomp.errors import (
    DegenerateBaselineError,
    FilterDesignError,
    InsufficientBaselineError,
)
from biocomp.ingest import ChannelKind
from biocomp.preprocess import (
    BaselineStats,
    ChannelStats,
    EEG_BANDS,
    bandpass,
    baseline_stats,
    eeg_band_split,
    zscore,
)
from tests.conftest import make_session, make_signal


def session_with_channel(values, rate=4.0, kind=ChannelKind.EDA, baseline_end=None):
    values = np.asarray(values, float)
    start = 0.0
    baseline_end = (len(values) - 1) / rate if baseline_end is None else baseline_end
    sig = make_signal(kind=kind, rate=rate, start=start, values=values)
    return make_session([], channels={kind: sig}, t_start=baseline_end, baseline_end=baseline_end)


def two_pass_mean_std(values):
    """Independent oracle: explicit two-pass mean and sample std."""
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, var**0.5


class TestBaselineStats:
    def test_constant_window(self):
        session = session_with_channel(np.full(200, 5.0))
        stats = baseline_stats(session)
        ch = stats[ChannelKind.EDA]
        assert ch.mean == 5.0
        assert ch.std == 0.0

    def test_alternating_mean(self):
        # window end between samples -> an even 120-sample window
        values = np.tile([1.0, 3.0], 100)
        stats = baseline_stats(session_with_channel(values, baseline_end=49.7))
        assert stats[ChannelKind.EDA].n_samples == 120
        assert stats[ChannelKind.EDA].mean == pytest.approx(2.0)

    def test_matches_two_pass_oracle(self, rng):
        values = rng.normal(2.0, 0.7, 400)
        session = session_with_channel(values)
        stats = baseline_stats(session)
        window = values[-121:]  # [end - 30 s, end] inclusive at 4 Hz
        mean, std = two_pass_mean_std(window)
        assert stats[ChannelKind.EDA].mean == pytest.approx(mean, abs=1e-12)
        assert stats[ChannelKind.EDA].std == pytest.approx(std, abs=1e-12)
        assert stats[ChannelKind.EDA].n_samples == 121

    def test_short_channel_rejected(self):
        session = session_with_channel(np.ones(40))  # 10 s at 4 Hz
        with pytest.raises(InsufficientBaselineError):
            baseline_stats(session)


def stats_for(kind, mean, std):
    return BaselineStats(
        window_start=0.0, window_end=30.0,
        channels={kind: ChannelStats(mean=mean, std=std, n_samples=121)},
    )


class TestZscore:
    def test_arithmetic(self):
        sig = make_signal(values=[3.0])
        out = zscore(sig, stats_for(ChannelKind.EDA, 2.0, 1.0))
        assert out.values[0] == pytest.approx(1.0)

    def test_baseline_window_becomes_standard(self, rng):
        values = rng.normal(5.0, 2.0, 121)
        session = session_with_channel(values)
        stats = baseline_stats(session)
        out = zscore(session.channels[ChannelKind.EDA], stats)
        assert np.mean(out.values) == pytest.approx(0.0, abs=1e-9)
        assert np.std(out.values, ddof=1) == pytest.approx(1.0, abs=1e-9)

    def test_degenerate_baseline(self):
        sig = make_signal(values=[1.0, 2.0])
        with pytest.raises(DegenerateBaselineError):
            zscore(sig, stats_for(ChannelKind.EDA, 1.0, 0.0))

    def test_identity_stats(self, rng):
        sig = make_signal(values=rng.normal(size=50))
        out = zscore(sig, stats_for(ChannelKind.EDA, 0.0, 1.0))
        assert np.array_equal(out.values, sig.values)

    def test_metadata_unchanged(self):
        sig = make_signal(rate=64.0, start=123.0, values=[1.0, 2.0, 3.0])
        out = zscore(sig, stats_for(ChannelKind.EDA, 1.0, 2.0))
        assert out.sample_rate == 64.0 and out.start_time == 123.0


def sine(freq, rate, seconds, amplitude=1.0):
    t = np.arange(int(seconds * rate)) / rate
    return amplitude * np.sin(2 * np.pi * freq * t)


def sos_gain_squared(low, high, rate, freq):
    """Analytic oracle: |H(e^jw)|^2 of the designed filter, i.e. the
    forward-backward magnitude, evaluated directly from the coefficients."""
    from biocomp.preprocess import _design

    sos = _design(low, high, rate)
    z = np.exp(1j * 2 * np.pi * freq / rate)
    h = 1.0 + 0.0j
    for b0, b1, b2, a0, a1, a2 in sos:
        h *= (b0 + b1 / z + b2 / z**2) / (a0 + a1 / z + a2 / z**2)
    return abs(h) ** 2


def rms(x):
    return float(np.sqrt(np.mean(np.square(x))))


def measured_ratio(freq, low, high, rate):
    sig = make_signal(kind=ChannelKind.EEG_RAW, rate=rate, values=sine(freq, rate, 8.0))
    out = bandpass(sig, low, high)
    core = slice(len(out.values) // 4, -len(out.values) // 4)  # skip transients
    return rms(out.values[core]) / rms(sig.values[core])


class TestBandpass:
    def test_alpha_passband(self):
        ratio = measured_ratio(10.0, 8.0, 12.0, 512.0)
        assert ratio >= 0.9
        assert ratio == pytest.approx(sos_gain_squared(8.0, 12.0, 512.0, 10.0), rel=0.02)

    def test_alpha_stopband(self):
        ratio = measured_ratio(40.0, 8.0, 12.0, 512.0)
        oracle = sos_gain_squared(8.0, 12.0, 512.0, 40.0)
        assert ratio <= 0.1 and oracle <= 0.1
        # deep-stopband measurements bottom out at filtfilt's numeric floor
        assert abs(ratio - oracle) < 1e-4

    def test_zero_signal(self):
        sig = make_signal(rate=64.0, values=np.zeros(512))
        out = bandpass(sig, 1.0, 8.0)
        assert np.allclose(out.values, 0.0)

    def test_band_outside_nyquist(self):
        sig = make_signal(rate=4.0, values=np.zeros(64))
        with pytest.raises(FilterDesignError):
            bandpass(sig, 1.0, 8.0)
        with pytest.raises(FilterDesignError):
            bandpass(sig, None, None)
        with pytest.raises(FilterDesignError):
            bandpass(sig, 3.0, 2.0)

    def test_length_preserved(self, rng):
        sig = make_signal(rate=64.0, values=rng.normal(size=777))
        assert len(bandpass(sig, 1.0, 8.0).values) == 777

    def test_linearity(self, rng):
        x = make_signal(rate=64.0, values=rng.normal(size=640))
        y = make_signal(rate=64.0, values=rng.normal(size=640))
        a, b = 1.7, -0.4
        combined = make_signal(rate=64.0, values=a * x.values + b * y.values)
        lhs = bandpass(combined, 1.0, 8.0).values
        rhs = a * bandpass(x, 1.0, 8.0).values + b * bandpass(y, 1.0, 8.0).values
        assert np.max(np.abs(lhs - rhs)) < 1e-9

    def test_zero_phase_no_shift(self):
        rate = 64.0
        t = np.arange(int(20 * rate)) / rate
        pulse = np.exp(-0.5 * ((t - 10.0) / 0.5) ** 2)
        out = bandpass(make_signal(rate=rate, values=pulse), None, 8.0).values
        weights = np.square(out)
        com = float(np.sum(np.arange(len(out)) * weights) / np.sum(weights))
        com_in = float(np.sum(np.arange(len(pulse)) * np.square(pulse)) / np.sum(pulse**2))
        assert abs(com - com_in) < 1.0  # less than one sample


class TestBandSplit:
    def band_energies(self, freq):
        sig = make_signal(kind=ChannelKind.EEG_RAW, rate=512.0, values=sine(freq, 512.0, 4.0))
        bands = eeg_band_split(sig)
        return {name: np.sum(np.square(s.values)) for name, s in bands.as_dict().items()}

    def test_alpha_sine_lands_in_alpha(self):
        energies = self.band_energies(10.0)
        assert energies["alpha"] / sum(energies.values()) >= 0.8

    def test_slow_sine_lands_in_delta(self):
        energies = self.band_energies(2.0)
        assert energies["delta"] / sum(energies.values()) >= 0.8

    def test_zero_input(self):
        sig = make_signal(kind=ChannelKind.EEG_RAW, rate=512.0, values=np.zeros(2048))
        bands = eeg_band_split(sig)
        for component in bands.as_dict().values():
            assert np.allclose(component.values, 0.0)
            assert component.start_time == sig.start_time
            assert len(component.values) == len(sig.values)

    def test_requires_eeg_channel(self):
        sig = make_signal(kind=ChannelKind.EDA, rate=512.0, values=np.zeros(64))
        with pytest.raises(ValueError):
            eeg_band_split(sig)

    def test_band_edges(self):
        assert EEG_BANDS == {
            "delta": (None, 4.0),
            "theta": (4.0, 8.0),
            "alpha": (8.0, 12.0),
            "beta": (12.0, 30.0),
            "gamma": (30.0, None),
        }
