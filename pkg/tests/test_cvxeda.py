import numpy as np
import pytest
from scipy import signal as sps

from biocomp.cvxeda import CvxEdaParams, decompose_eda
from biocomp.errors import DecompositionError
from biocomp.ingest import ChannelKind
from biocomp.synth import scr_kernel, scr_peak_offset
from tests.conftest import make_signal


def eda(values, rate=4.0):
    return make_signal(kind=ChannelKind.EDA, rate=rate, values=np.asarray(values, float))


def smooth_noise(rng, n=240, cutoff=0.1, offset=0.0):
    raw = rng.normal(size=n)
    return sps.lfilter(*sps.butter(2, cutoff), raw) + offset


class TestDecomposeEda:
    def test_constant_input(self):
        out = decompose_eda(eda(np.full(240, 5.0)))
        assert np.abs(out.tonic.values - 5.0).max() < 1e-3
        assert np.abs(out.phasic.values).max() < 1e-3
        assert np.abs(out.driver).max() < 1e-6

    def test_ramp_with_scr_bump(self):
        rate = 4.0
        n = 240
        t = np.arange(n) / rate
        kernel = scr_kernel(rate)
        y = 2.0 + 0.01 * t
        onset = int(30 * rate)
        y[onset:onset + len(kernel)] += 0.8 * kernel[: n - onset]
        out = decompose_eda(eda(y))
        bump_center = 30.0 + scr_peak_offset()
        phasic_peak = np.argmax(out.phasic.values) / rate
        assert abs(phasic_peak - bump_center) <= 2.0

    def test_reconstruction_identity(self, rng):
        y = smooth_noise(rng, offset=3.0)
        out = decompose_eda(eda(y))
        recon = out.tonic.values + out.phasic.values + out.residual.values
        assert np.abs(recon - y).max() <= 1e-6 * np.abs(y).max()

    def test_driver_nonnegative_and_phasic_floor(self, rng):
        y = smooth_noise(rng, cutoff=0.08, offset=1.0)
        out = decompose_eda(eda(y))
        assert (out.driver >= 0.0).all()
        assert out.phasic.values.min() >= -1e-9

    def test_components_share_metadata(self, rng):
        sig = make_signal(kind=ChannelKind.EDA, rate=4.0, start=777.5,
                          values=smooth_noise(rng))
        out = decompose_eda(sig)
        for part in (out.tonic, out.phasic, out.residual):
            assert part.sample_rate == sig.sample_rate
            assert part.start_time == sig.start_time
            assert len(part.values) == len(sig.values)

    def test_objective_monotone_decrease(self, rng):
        y = smooth_noise(rng, offset=2.0)
        out = decompose_eda(eda(y))
        assert (np.diff(out.objective_history) <= 1e-10).all()
        assert out.kkt_residual <= CvxEdaParams().kkt_tol

    def test_nonconvergence_raises_with_residual(self, rng):
        y = smooth_noise(rng, offset=2.0)
        params = CvxEdaParams(max_iter=1)
        with pytest.raises(DecompositionError) as info:
            decompose_eda(eda(y), params)
        assert info.value.kkt_residual is not None
        assert info.value.kkt_residual > params.kkt_tol

    def test_too_short_input(self):
        with pytest.raises(ValueError):
            decompose_eda(eda(np.ones(4)))

    def test_wrong_channel(self):
        sig = make_signal(kind=ChannelKind.BVP, rate=4.0, values=np.ones(64))
        with pytest.raises(ValueError):
            decompose_eda(sig)


class TestCvxEdaParams:
    def test_defaults(self):
        p = CvxEdaParams()
        assert (p.tau0, p.tau1, p.knot_s, p.alpha, p.gamma) == (2.0, 0.7, 10.0, 8e-4, 1e-2)

    def test_validation(self):
        with pytest.raises(ValueError):
            CvxEdaParams(tau0=0.5, tau1=0.7)
        with pytest.raises(ValueError):
            CvxEdaParams(knot_s=0.0)
        with pytest.raises(ValueError):
            CvxEdaParams(alpha=-1.0)

    def test_from_dict_ignores_unknown(self):
        p = CvxEdaParams.from_dict({"alpha": 1e-3, "bogus": 1})
        assert p.alpha == 1e-3
