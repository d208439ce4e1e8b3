"""Model selection and the two evaluation protocols.

Tuning is a stratified 5-fold grid search on the training split,
maximizing mean balanced accuracy with ties resolved to the earliest grid
point. Evaluation is either leave-one-participant-out (one fold per
participant) or repeated participant-level hold-out with a 20:8 split
ratio. Every fold derives its own random stream from the master seed, so
results do not depend on execution order.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainError
from ..features import FeatureMatrix
from .classifiers import ClassifierSpec, default_spec, fit_model
from .metrics import (
    Confusion,
    balanced_accuracy,
    confusion_from_predictions,
    has_both_classes,
    macro_metrics,
)
from .trees import CartClassifier, _boost_stages, bin_features, prune_path, tree_leaf_prob
from .classifiers import knn_votes

INNER_FOLDS = 5
HOLDOUT_TRAIN_RATIO = 20.0 / 28.0


def stratified_folds(y: np.ndarray, k: int, rng: np.random.Generator):
    """Deal each class round-robin into k buckets after a seeded shuffle."""
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in (0, 1):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(len(idx))]
        for pos, row in enumerate(idx):
            buckets[pos % k].append(int(row))
    folds = []
    all_rows = set(range(len(y)))
    for bucket in buckets:
        val = np.array(sorted(bucket), dtype=int)
        train = np.array(sorted(all_rows - set(bucket)), dtype=int)
        folds.append((train, val))
    return folds


def _standardize_pair(X_train, X_other):
    mean = X_train.mean(axis=0)
    std = X_train.std(axis=0)
    std[std == 0.0] = 1.0
    return (X_train - mean) / std, (X_other - mean) / std


def _grid_fold_predictions(spec: ClassifierSpec, points, X_tr, y_tr, X_va, seed):
    """Validation predictions for every grid point on one inner fold.

    Families whose grid shares training work take a shortcut: k-NN reuses
    one distance matrix, the tree reuses one grown tree across the pruning
    path, and boosting evaluates stage prefixes of a single run. The
    shortcuts are exact (verified against the one-fit-per-point path in the
    test suite).
    """
    family = spec.family
    if family == "KNN":
        Xs_tr, Xs_va = _standardize_pair(X_tr, X_va)
        return knn_votes(Xs_tr, y_tr, Xs_va, [p["k"] for p in points])
    if family == "TREE":
        alphas = [p["ccp_alpha"] for p in points]
        base = CartClassifier(ccp_alpha=0.0)
        thresholds, codes = bin_features(X_tr)
        from .trees import grow_forest

        forest = grow_forest(
            codes, thresholds, y_tr.astype(float), np.ones((1, len(y_tr))),
            max_depth=base.max_depth,
        )
        masks = prune_path(forest, alphas)
        return [
            (tree_leaf_prob(forest, 0, X_va, mask) >= 0.5).astype(int) for mask in masks
        ]
    if family == "BOOST":
        trial_counts = [p["trials"] for p in points]
        needed = set(trial_counts)
        thresholds, codes = bin_features(X_tr)
        fallback = int(np.mean(y_tr) >= 0.5)
        score = np.zeros(len(X_va))
        snapshots: dict[int, np.ndarray] = {}
        n_stages = 0
        for forest, weight in _boost_stages(
            codes, thresholds, y_tr.astype(float), X_tr, max(trial_counts), 2
        ):
            pred = (tree_leaf_prob(forest, 0, X_va) >= 0.5).astype(float)
            score = score + weight * (2.0 * pred - 1.0)
            n_stages += 1
            if n_stages in needed:
                snapshots[n_stages] = (score >= 0.0).astype(int)
        final = (score >= 0.0).astype(int)
        out = []
        for t in trial_counts:
            if n_stages == 0:
                out.append(np.full(len(X_va), fallback, dtype=int))
            elif t <= n_stages:
                out.append(snapshots[t])
            else:
                out.append(final)  # boosting stopped early; shorter run is identical
        return out
    return [fit_model(family, p, X_tr, y_tr, seed=seed).predict(X_va) for p in points]


def grid_search(
    spec: ClassifierSpec, matrix: FeatureMatrix, rng: np.random.Generator
) -> dict:
    """Pick the grid point with the best mean inner-CV balanced accuracy."""
    X = matrix.values
    y = matrix.class_vector()
    counts = np.bincount(y, minlength=2)
    if counts.min() < 2:
        raise TrainError("grid search needs at least two rows of each class")
    points = spec.grid_points()
    if len(points) == 1:
        return points[0]
    k = int(min(INNER_FOLDS, counts.min()))
    sums = np.zeros(len(points))
    for train_idx, val_idx in stratified_folds(y, k, rng):
        predictions = _grid_fold_predictions(
            spec, points, X[train_idx], y[train_idx], X[val_idx], spec.seed
        )
        for j, pred in enumerate(predictions):
            sums[j] += balanced_accuracy(confusion_from_predictions(y[val_idx], pred))
    return points[int(np.argmax(sums))]


def train(spec: ClassifierSpec, params: dict, matrix: FeatureMatrix):
    """Fit one model on a full matrix with the chosen parameters."""
    return fit_model(spec.family, params, matrix.values, matrix.class_vector(), seed=spec.seed)


@dataclass
class FoldResult:
    fold_id: str
    test_participants: tuple[str, ...]
    train_participants: tuple[str, ...]
    chosen_params: dict
    confusion: Confusion
    bac: float | None
    model: object | None = None

    def to_dict(self) -> dict:
        return {
            "fold_id": self.fold_id,
            "test_participants": list(self.test_participants),
            "train_participants": list(self.train_participants),
            "chosen_params": self.chosen_params,
            "confusion": self.confusion.to_dict(),
            "bac": self.bac,
        }


@dataclass
class PairResult:
    config: str
    family: str
    protocol: str
    folds: list[FoldResult] = field(default_factory=list)

    def valid_folds(self) -> list[FoldResult]:
        return [f for f in self.folds if f.bac is not None]

    @property
    def median_bac(self) -> float | None:
        valid = self.valid_folds()
        return float(np.median([f.bac for f in valid])) if valid else None

    def macro_averages(self) -> tuple[float, float, float] | None:
        valid = self.valid_folds()
        if not valid:
            return None
        triples = [macro_metrics(f.confusion) for f in valid]
        return tuple(float(np.mean([t[i] for t in triples])) for i in range(3))  # type: ignore[return-value]

    def to_dict(self) -> dict:
        macro = self.macro_averages()
        return {
            "config": self.config,
            "family": self.family,
            "protocol": self.protocol,
            "median_bac": self.median_bac,
            "macro_precision": macro[0] if macro else None,
            "macro_recall": macro[1] if macro else None,
            "macro_f1": macro[2] if macro else None,
            "n_folds": len(self.folds),
            "n_valid_folds": len(self.valid_folds()),
            "folds": [f.to_dict() for f in self.folds],
        }


def _pair_seed(seed: int, config: str, family: str) -> list[int]:
    return [int(seed) & 0xFFFFFFFF, zlib.crc32(f"{config}|{family}".encode())]


def _run_fold(matrix, spec, test_mask, fold_id, seed_entropy, keep_model):
    test = matrix.subset(test_mask)
    trainm = matrix.subset(~test_mask)
    rng = np.random.default_rng(np.random.SeedSequence(seed_entropy))
    chosen = grid_search(spec, trainm, rng)
    model = train(spec, chosen, trainm)
    pred = model.predict(test.values)
    conf = confusion_from_predictions(test.class_vector(), pred)
    return FoldResult(
        fold_id=fold_id,
        test_participants=tuple(sorted(set(test.participant_ids))),
        train_participants=tuple(sorted(set(trainm.participant_ids))),
        chosen_params=chosen,
        confusion=conf,
        bac=balanced_accuracy(conf) if has_both_classes(conf) else None,
        model=model if keep_model else None,
    )


def loro_cv(
    matrix: FeatureMatrix,
    spec: ClassifierSpec,
    seed: int = 0,
    config_name: str = "",
    keep_models: bool = False,
    jobs: int = 1,
) -> PairResult:
    """One fold per participant: train on everyone else, test on them."""
    pids = sorted(set(matrix.participant_ids))
    if len(pids) < 2:
        raise ValueError("leave-one-participant-out needs at least two participants")
    base = _pair_seed(seed, config_name, spec.family)
    tasks = [
        (matrix.participant_ids == pid, str(pid), base + [0, i])
        for i, pid in enumerate(pids)
    ]
    runner = _parallel_runner(jobs)
    folds = runner(
        lambda t: _run_fold(matrix, spec, t[0], t[1], t[2], keep_models), tasks
    )
    return PairResult(config=config_name, family=spec.family, protocol="loro", folds=folds)


def holdout_eval(
    matrix: FeatureMatrix,
    spec: ClassifierSpec,
    repeats: int = 10,
    seed: int = 0,
    config_name: str = "",
    keep_models: bool = False,
    jobs: int = 1,
) -> PairResult:
    """Repeated participant-level splits at the 20:8 ratio (train rounded up)."""
    pids = np.array(sorted(set(matrix.participant_ids)), dtype=object)
    if len(pids) < 9:
        raise ValueError("hold-out evaluation needs at least nine participants")
    n_train = int(np.ceil(len(pids) * HOLDOUT_TRAIN_RATIO))
    base = _pair_seed(seed, config_name, spec.family)
    tasks = []
    for r in range(repeats):
        rng = np.random.default_rng(np.random.SeedSequence(base + [1, r]))
        perm = rng.permutation(len(pids))
        test_pids = set(pids[perm[n_train:]])
        test_mask = np.array([pid in test_pids for pid in matrix.participant_ids])
        tasks.append((test_mask, f"repeat-{r:02d}", base + [2, r]))
    runner = _parallel_runner(jobs)
    folds = runner(
        lambda t: _run_fold(matrix, spec, t[0], t[1], t[2], keep_models), tasks
    )
    return PairResult(config=config_name, family=spec.family, protocol="holdout", folds=folds)


def _parallel_runner(jobs: int):
    if jobs and jobs > 1:
        try:
            from joblib import Parallel, delayed
        except ImportError:
            jobs = 1
        else:
            def run(fn, tasks):
                return Parallel(n_jobs=jobs)(delayed(fn)(t) for t in tasks)

            return run

    def run(fn, tasks):
        return [fn(t) for t in tasks]

    return run


@dataclass
class EvalReport:
    protocol: str
    seed: int
    pairs: list[PairResult]

    def pair(self, config: str, family: str) -> PairResult:
        for p in self.pairs:
            if p.config == config and p.family == family:
                return p
        raise KeyError((config, family))

    def to_dict(self) -> dict:
        results: dict = {}
        for p in self.pairs:
            results.setdefault(p.config, {})[p.family] = p.to_dict()
        return {"protocol": self.protocol, "seed": self.seed, "results": results}


def evaluate(
    matrices: dict[str, FeatureMatrix],
    families,
    protocol: str,
    seed: int = 0,
    repeats: int = 10,
    jobs: int = 1,
) -> EvalReport:
    """Run every (configuration, family) pair under one protocol."""
    pairs = []
    for config_name, matrix in matrices.items():
        for family in families:
            spec = default_spec(family, len(matrix.feature_names), seed=seed)
            if protocol == "loro":
                pairs.append(
                    loro_cv(matrix, spec, seed=seed, config_name=config_name, jobs=jobs)
                )
            elif protocol == "holdout":
                pairs.append(
                    holdout_eval(
                        matrix, spec, repeats=repeats, seed=seed,
                        config_name=config_name, jobs=jobs,
                    )
                )
            else:
                raise ValueError(f"unknown protocol {protocol!r}")
    return EvalReport(protocol=protocol, seed=seed, pairs=pairs)


def best_bac_per_participant(report: EvalReport) -> dict[str, float]:
    """Each participant's maximum own-fold BAC over all configs and families."""
    if report.protocol != "loro":
        raise ValueError("per-participant best BAC is defined for LORO reports")
    best: dict[str, float] = {}
    for pair in report.pairs:
        for fold in pair.folds:
            if fold.bac is None or len(fold.test_participants) != 1:
                continue
            pid = fold.test_participants[0]
            if pid not in best or fold.bac > best[pid]:
                best[pid] = fold.bac
    return best
