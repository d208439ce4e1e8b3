import json

import numpy as np
import pytest

from biocomp.features import FeatureMatrix
from biocomp.learn.classifiers import default_spec, fit_model
from biocomp.learn.evaluation import (
    _grid_fold_predictions,
    best_bac_per_participant,
    evaluate,
    grid_search,
    holdout_eval,
    loro_cv,
    stratified_folds,
    train,
)
from biocomp.learn.metrics import Confusion


def synthetic_matrix(rng, n_participants=6, tasks_per=9, d=5, signal=2.0, seed_labels=None):
    """Rows with a class effect of size `signal` on the first feature."""
    rows, pids, tasks, labels = [], [], [], []
    values = []
    for p in range(n_participants):
        pid = f"P{p + 1:02d}"
        for t in range(tasks_per):
            label = "CODE" if t % 3 == 0 else "PROSE"
            x = rng.normal(0.0, 1.0, d)
            if label == "CODE":
                x[0] += signal
            pids.append(pid)
            tasks.append(f"t{t}")
            labels.append(label)
            values.append(x)
    return FeatureMatrix(
        feature_names=tuple(f"f{i}" for i in range(d)),
        participant_ids=np.array(pids, dtype=object),
        task_ids=np.array(tasks, dtype=object),
        labels=np.array(labels, dtype=object),
        values=np.array(values),
    )


class TestStratifiedFolds:
    def test_partition_and_class_coverage(self, rng):
        y = np.array([0] * 14 + [1] * 7)
        folds = stratified_folds(y, 5, rng)
        seen = []
        for train_idx, val_idx in folds:
            assert set(train_idx) | set(val_idx) == set(range(21))
            assert len(set(train_idx) & set(val_idx)) == 0
            assert set(y[val_idx]) == {0, 1}
            seen.extend(val_idx)
        assert sorted(seen) == list(range(21))


class TestGridSearch:
    def test_single_point_grid(self, rng):
        matrix = synthetic_matrix(rng)
        spec = default_spec("NB", 5)
        spec = type(spec)(family="NB", grid=(("var_smoothing", (1e-9,)),), seed=0)
        assert grid_search(spec, matrix, rng) == {"var_smoothing": 1e-9}

    def test_tie_breaks_to_first_point(self, rng):
        # fully separable: every k wins with inner BAC 1.0 -> first k chosen
        matrix = synthetic_matrix(rng, signal=50.0)
        spec = default_spec("KNN", 5)
        chosen = grid_search(spec, matrix, np.random.default_rng(0))
        assert chosen == {"k": 5}

    @pytest.mark.parametrize("family", ["KNN", "TREE", "BOOST"])
    def test_fast_paths_match_generic_fits(self, family, rng):
        matrix = synthetic_matrix(rng, n_participants=5, signal=0.8)
        spec = default_spec(family, 5, seed=0)
        points = spec.grid_points()
        X, y = matrix.values, matrix.class_vector()
        X_tr, y_tr, X_va = X[:30], y[:30], X[30:]
        fast = _grid_fold_predictions(spec, points, X_tr, y_tr, X_va, 0)
        slow = [fit_model(family, p, X_tr, y_tr, seed=0).predict(X_va) for p in points]
        for a, b in zip(fast, slow):
            assert np.array_equal(a, b)


class TestLoro:
    def test_fold_shape_and_disjointness(self, rng):
        matrix = synthetic_matrix(rng, n_participants=6)
        result = loro_cv(matrix, default_spec("NB", 5), seed=1, config_name="HEART")
        assert len(result.folds) == 6
        for fold in result.folds:
            assert len(fold.test_participants) == 1
            assert fold.test_participants[0] not in fold.train_participants
            assert len(fold.train_participants) == 5
            assert fold.confusion.total == 9

    def test_constant_features_give_majority_bac(self, rng):
        # all-constant features force the majority (PROSE) prediction
        matrix = synthetic_matrix(rng, n_participants=4, signal=0.0)
        matrix.values[:] = 1.0
        result = loro_cv(matrix, default_spec("NB", 5), seed=0, config_name="X")
        for fold in result.folds:
            assert fold.bac == pytest.approx(0.5)

    def test_separable_matrix_scores_high(self, rng):
        matrix = synthetic_matrix(rng, n_participants=6, signal=6.0)
        result = loro_cv(matrix, default_spec("KNN", 5), seed=0, config_name="X")
        assert result.median_bac >= 0.95

    def test_leakage_instrumentation(self, rng):
        matrix = synthetic_matrix(rng, n_participants=4)
        result = loro_cv(matrix, default_spec("KNN", 5), seed=0,
                         config_name="X", keep_models=True)
        for fold in result.folds:
            train_mask = matrix.rows_for(fold.train_participants)
            expected_mean = matrix.values[train_mask].mean(axis=0)
            assert np.allclose(fold.model.scaler_mean_, expected_mean)

    def test_needs_two_participants(self, rng):
        matrix = synthetic_matrix(rng, n_participants=1)
        with pytest.raises(ValueError):
            loro_cv(matrix, default_spec("NB", 5))


class TestHoldout:
    def test_split_sizes_28(self, rng):
        matrix = synthetic_matrix(rng, n_participants=28, tasks_per=3)
        result = holdout_eval(matrix, default_spec("NB", 5), repeats=10, seed=0,
                              config_name="X")
        assert len(result.folds) == 10
        for fold in result.folds:
            assert len(fold.train_participants) == 20
            assert len(fold.test_participants) == 8

    def test_split_sizes_scale_with_rounding_up(self, rng):
        matrix = synthetic_matrix(rng, n_participants=9, tasks_per=3)
        result = holdout_eval(matrix, default_spec("NB", 5), repeats=3, seed=0,
                              config_name="X")
        for fold in result.folds:
            assert len(fold.train_participants) == 7
            assert len(fold.test_participants) == 2

    def test_determinism(self, rng):
        matrix = synthetic_matrix(rng, n_participants=9, tasks_per=5)
        a = holdout_eval(matrix, default_spec("TREE", 5), repeats=4, seed=7, config_name="X")
        b = holdout_eval(matrix, default_spec("TREE", 5), repeats=4, seed=7, config_name="X")
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_permuted_labels_score_near_chance(self, rng):
        matrix = synthetic_matrix(rng, n_participants=12, tasks_per=9, signal=3.0)
        perm = rng.permutation(matrix.n_rows)
        matrix.labels = matrix.labels[perm]  # break the feature-label link
        result = holdout_eval(matrix, default_spec("KNN", 5), repeats=10, seed=0,
                              config_name="X")
        assert 0.4 <= result.median_bac <= 0.6

    def test_too_few_participants(self, rng):
        matrix = synthetic_matrix(rng, n_participants=8)
        with pytest.raises(ValueError):
            holdout_eval(matrix, default_spec("NB", 5))


class TestReportHelpers:
    def test_best_bac_scan_oracle(self, rng):
        matrix = synthetic_matrix(rng, n_participants=5, signal=1.0)
        report = evaluate({"A": matrix, "B": matrix}, ["NB", "KNN"], "loro", seed=0)
        best = best_bac_per_participant(report)
        # exhaustive scan over the report table
        oracle: dict = {}
        for pair in report.pairs:
            for fold in pair.folds:
                if fold.bac is None:
                    continue
                pid = fold.test_participants[0]
                oracle[pid] = max(oracle.get(pid, -1.0), fold.bac)
        assert best == oracle
        assert len(best) == 5

    def test_two_family_max(self):
        report_pairs = []
        for family, bac in (("NB", 0.6), ("KNN", 0.8)):
            from biocomp.learn.evaluation import FoldResult, PairResult

            pair = PairResult(config="X", family=family, protocol="loro")
            pair.folds.append(
                FoldResult(
                    fold_id="P01",
                    test_participants=("P01",),
                    train_participants=("P02",),
                    chosen_params={},
                    confusion=Confusion(1, 1, 1, 1),
                    bac=bac,
                )
            )
            report_pairs.append(pair)
        from biocomp.learn.evaluation import EvalReport

        report = EvalReport(protocol="loro", seed=0, pairs=report_pairs)
        assert best_bac_per_participant(report) == {"P01": 0.8}

    def test_evaluate_deterministic_serialization(self, rng):
        matrix = synthetic_matrix(rng, n_participants=4)
        a = evaluate({"A": matrix}, ["TREE"], "loro", seed=5)
        b = evaluate({"A": matrix}, ["TREE"], "loro", seed=5)
        assert json.dumps(a.to_dict(), sort_keys=True) == json.dumps(b.to_dict(), sort_keys=True)

    def test_median_and_macro_skip_invalid_folds(self):
        from biocomp.learn.evaluation import FoldResult, PairResult

        pair = PairResult(config="X", family="NB", protocol="loro")
        pair.folds.append(
            FoldResult("P01", ("P01",), ("P02",), {}, Confusion(2, 0, 0, 2), 1.0)
        )
        pair.folds.append(
            FoldResult("P02", ("P02",), ("P01",), {}, Confusion(0, 0, 1, 3), None)
        )
        assert pair.median_bac == 1.0
        assert len(pair.valid_folds()) == 1
