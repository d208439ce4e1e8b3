import numpy as np
import pytest

from biocomp.errors import MissingChannelError
from biocomp.features import SignalConfig
from biocomp.ingest import ChannelKind
from biocomp.pipeline import (
    build_matrices,
    build_matrix,
    load_corpus,
    matrix_for_config,
    prepare_corpus,
)
from biocomp.synth import ScheduleTemplate, generate_corpus, separable_profiles

HEART_TEMPLATE = ScheduleTemplate(n_runs=1, channels=(ChannelKind.BVP,))
FULL_TEMPLATE = ScheduleTemplate(n_runs=1)


@pytest.fixture(scope="module")
def heart_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("heart_corpus")
    generate_corpus(root, n_participants=4, profiles=separable_profiles(),
                    template=HEART_TEMPLATE, seed=21)
    return load_corpus(root)


@pytest.fixture(scope="module")
def full_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("full_corpus")
    generate_corpus(root, n_participants=2, profiles=separable_profiles(),
                    template=FULL_TEMPLATE, seed=22)
    return load_corpus(root)


class TestBuildMatrix:
    def test_heart_matrix_shape(self, heart_corpus):
        matrix = build_matrix(heart_corpus, SignalConfig.parse("HEART"))
        assert len(matrix.feature_names) == 9
        assert matrix.n_rows == 4 * 9
        assert not np.isnan(matrix.values).any()

    def test_missing_channel_names_session(self, heart_corpus):
        with pytest.raises(MissingChannelError, match="P01"):
            build_matrix(heart_corpus, SignalConfig.parse("EEG"))

    def test_full_configs(self, full_corpus):
        matrices = build_matrices(
            full_corpus,
            [SignalConfig.parse(n) for n in ("EEG", "EDA", "HEART", "EEG+EDA+HEART")],
        )
        assert len(matrices["EEG"].feature_names) == 31
        assert len(matrices["EDA"].feature_names) == 6
        assert len(matrices["HEART"].feature_names) == 9
        assert len(matrices["EEG+EDA+HEART"].feature_names) == 46
        for matrix in matrices.values():
            assert matrix.n_rows == 2 * 9
            assert not np.isnan(matrix.values).any()

    def test_rows_sorted_and_permutation_invariant(self, heart_corpus):
        forward = build_matrix(heart_corpus, SignalConfig.parse("HEART"))
        backward = build_matrix(list(reversed(heart_corpus)), SignalConfig.parse("HEART"))
        assert np.array_equal(forward.values, backward.values)
        assert list(forward.participant_ids) == sorted(forward.participant_ids)

    def test_labels_match_manifest_kinds(self, heart_corpus):
        matrix = build_matrix(heart_corpus, SignalConfig.parse("HEART"))
        per_participant = {}
        for pid, label in zip(matrix.participant_ids, matrix.labels):
            per_participant.setdefault(pid, []).append(label)
        for labels in per_participant.values():
            assert labels.count("CODE") == 3
            assert labels.count("PROSE") == 6

    def test_prepared_rows_reusable(self, heart_corpus):
        prepared = prepare_corpus(heart_corpus)
        a = matrix_for_config(prepared, SignalConfig.parse("HEART"))
        b = build_matrix(heart_corpus, SignalConfig.parse("HEART"))
        assert np.array_equal(a.values, b.values)


class TestSignalContent:
    def test_heart_effect_visible(self, heart_corpus):
        # planted +10 bpm on CODE should separate hr_mean_diff by class
        matrix = build_matrix(heart_corpus, SignalConfig.parse("HEART"))
        j = matrix.feature_names.index("hr_mean_diff")
        code = matrix.values[matrix.labels == "CODE", j]
        prose = matrix.values[matrix.labels == "PROSE", j]
        assert code.mean() > prose.mean() + 3.0

    def test_feature_sign_invariants(self, full_corpus):
        matrix = build_matrix(full_corpus, SignalConfig.parse("EEG+EDA+HEART"))
        def col(name):
            return matrix.values[:, matrix.feature_names.index(name)]
        for band in ("delta", "theta", "alpha", "beta", "gamma"):
            assert (col(f"eeg_power_{band}") >= 0).all()
        assert (col("hrv_sdnn") >= 0).all()
        assert (col("hrv_rmssd") >= 0).all()
        # phasic is nonnegative, so its area can dip only by tolerance
        assert (col("eda_phasic_auc") >= -1e-6).all()
