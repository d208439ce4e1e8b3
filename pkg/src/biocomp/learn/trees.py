"""Histogram-based decision trees: CART with cost-complexity pruning, a
bagged forest with per-split feature sampling, and boosted depth-2 trees.

Features are quantile-binned once per fit; split search then reduces to
weighted class histograms accumulated level by level with ``np.bincount``,
which keeps tree growth vectorized (and an order of magnitude faster than
a per-node Python loop at the data sizes this pipeline sees). Split ties
resolve to the lowest feature index, then the lowest cut, so fits are
deterministic for a fixed seed.
"""
from __future__ import annotations

import numpy as np

MAX_BINS = 16
_IMPROVEMENT_EPS = 1e-12


def bin_features(X: np.ndarray):
    """Quantile thresholds per column and integer codes.

    ``code <= c``  is equivalent to  ``x < thresholds[c]``.
    """
    n, d = X.shape
    qs = np.linspace(0.0, 1.0, MAX_BINS + 1)[1:-1]
    thresholds = []
    codes = np.empty((n, d), dtype=np.int64)
    for j in range(d):
        t = np.unique(np.quantile(X[:, j], qs))
        thresholds.append(t)
        codes[:, j] = np.searchsorted(t, X[:, j], side="right")
    return thresholds, codes


class Forest:
    """Flat node arrays shared by every tree; ``roots`` holds one id per tree."""

    __slots__ = ("feature", "threshold", "cut", "left", "right", "prob", "n_total",
                 "n_pos", "roots")

    def __init__(self):
        self.feature: np.ndarray | None = None
        self.threshold = None
        self.cut = None
        self.left = None
        self.right = None
        self.prob = None
        self.n_total = None
        self.n_pos = None
        self.roots = None


def grow_forest(
    codes: np.ndarray,
    thresholds: list[np.ndarray],
    y: np.ndarray,
    sample_weight: np.ndarray,
    max_depth: int,
    mtry: int | None = None,
    rng: np.random.Generator | None = None,
) -> Forest:
    """Grow ``sample_weight.shape[0]`` trees level-by-level in one pass.

    Each tree sees every row, weighted by its row of ``sample_weight``
    (bootstrap counts for bagging, boosting weights, or all ones). ``mtry``
    restricts each node's split search to a random feature subset.
    """
    n, d = codes.shape
    n_trees = sample_weight.shape[0]
    B = MAX_BINS
    col = np.arange(d, dtype=np.int64)

    feature = [-1] * n_trees
    cut = [-1] * n_trees
    thr = [np.inf] * n_trees
    left = [-1] * n_trees
    right = [-1] * n_trees
    n_tot_node = [0.0] * n_trees
    n_pos_node = [0.0] * n_trees

    node_of = np.tile(np.arange(n_trees, dtype=np.int64)[:, None], (1, n))
    active = sample_weight > 0

    for depth in range(max_depth + 1):
        t_idx, s_idx = np.nonzero(active)
        if len(t_idx) == 0:
            break
        gnodes = node_of[t_idx, s_idx]
        level_nodes, local = np.unique(gnodes, return_inverse=True)
        k = len(level_nodes)
        flat = ((local[:, None] * d + col[None, :]) * B + codes[s_idx]).ravel()
        w_pair = sample_weight[t_idx, s_idx]
        htot = np.bincount(flat, weights=np.repeat(w_pair, d), minlength=k * d * B)
        hpos = np.bincount(flat, weights=np.repeat(w_pair * y[s_idx], d), minlength=k * d * B)
        ltot = htot.reshape(k, d, B).cumsum(axis=2)
        lpos = hpos.reshape(k, d, B).cumsum(axis=2)
        node_tot = ltot[:, 0, -1]
        node_pos = lpos[:, 0, -1]
        rtot = node_tot[:, None, None] - ltot
        rpos = node_pos[:, None, None] - lpos
        with np.errstate(divide="ignore", invalid="ignore"):
            gini_l = ltot - (lpos**2 + (ltot - lpos) ** 2) / ltot
            gini_r = rtot - (rpos**2 + (rtot - rpos) ** 2) / rtot
        score = np.where((ltot > 0) & (rtot > 0), gini_l + gini_r, np.inf)
        if mtry is not None and mtry < d:
            pick = rng.random((k, d)).argsort(axis=1)[:, :mtry]
            allowed = np.zeros((k, d), dtype=bool)
            allowed[np.arange(k)[:, None], pick] = True
            score = np.where(allowed[:, :, None], score, np.inf)
        score = score[:, :, : B - 1].reshape(k, -1)
        best_flat = score.argmin(axis=1)
        best_score = score[np.arange(k), best_flat]
        best_f = best_flat // (B - 1)
        best_c = best_flat % (B - 1)
        parent_gini = node_tot - (node_pos**2 + (node_tot - node_pos) ** 2) / np.maximum(
            node_tot, 1e-300
        )
        can_split = (
            (depth < max_depth)
            & np.isfinite(best_score)
            & (best_score < parent_gini - _IMPROVEMENT_EPS)
        )

        for i in range(k):
            node = int(level_nodes[i])
            n_tot_node[node] = float(node_tot[i])
            n_pos_node[node] = float(node_pos[i])
            if not can_split[i]:
                continue
            f = int(best_f[i])
            feature[node] = f
            cut[node] = int(best_c[i])
            t_arr = thresholds[f]
            thr[node] = float(t_arr[cut[node]]) if cut[node] < len(t_arr) else np.inf
            left[node] = len(feature)
            right[node] = len(feature) + 1
            for _ in range(2):
                feature.append(-1)
                cut.append(-1)
                thr.append(np.inf)
                left.append(-1)
                right.append(-1)
                n_tot_node.append(0.0)
                n_pos_node.append(0.0)

        feat_arr = np.array(feature)
        cut_arr = np.array(cut)
        left_arr = np.array(left)
        right_arr = np.array(right)
        cur = node_of[t_idx, s_idx]
        splits = feat_arr[cur] >= 0
        src_t, src_s, src_cur = t_idx[splits], s_idx[splits], cur[splits]
        go_left = codes[src_s, feat_arr[src_cur]] <= cut_arr[src_cur]
        node_of[src_t, src_s] = np.where(go_left, left_arr[src_cur], right_arr[src_cur])
        active[t_idx[~splits], s_idx[~splits]] = False

    forest = Forest()
    forest.feature = np.array(feature, dtype=np.int64)
    forest.cut = np.array(cut, dtype=np.int64)
    forest.threshold = np.array(thr, dtype=float)
    forest.left = np.array(left, dtype=np.int64)
    forest.right = np.array(right, dtype=np.int64)
    forest.n_total = np.array(n_tot_node, dtype=float)
    forest.n_pos = np.array(n_pos_node, dtype=float)
    with np.errstate(invalid="ignore"):
        forest.prob = np.where(forest.n_total > 0, forest.n_pos / np.maximum(forest.n_total, 1e-300), 0.0)
    forest.roots = np.arange(n_trees, dtype=np.int64)
    return forest


def tree_leaf_prob(forest: Forest, root: int, X: np.ndarray, pruned: np.ndarray | None = None):
    """Positive-class fraction at the leaf each row of ``X`` lands in."""
    node = np.full(len(X), root, dtype=np.int64)
    while True:
        f = forest.feature[node]
        is_split = f >= 0
        if pruned is not None:
            is_split &= ~pruned[node]
        idx = np.flatnonzero(is_split)
        if len(idx) == 0:
            break
        sub = node[idx]
        go_left = X[idx, f[idx]] < forest.threshold[sub]
        node[idx] = np.where(go_left, forest.left[sub], forest.right[sub])
    return forest.prob[node]


# --- CART with cost-complexity pruning -------------------------------------

class CartClassifier:
    """Greedy gini tree pruned by minimal cost-complexity at ``ccp_alpha``."""

    def __init__(self, ccp_alpha: float = 0.0, max_depth: int = 12):
        self.ccp_alpha = float(ccp_alpha)
        self.max_depth = max_depth
        self.forest_: Forest | None = None
        self.pruned_: np.ndarray | None = None

    def fit(self, X, y):
        thresholds, codes = bin_features(X)
        w = np.ones((1, len(y)))
        self.forest_ = grow_forest(codes, thresholds, np.asarray(y, dtype=float), w,
                                   max_depth=self.max_depth)
        self.pruned_ = prune_mask_at(self.forest_, self.ccp_alpha)
        return self

    def predict(self, X):
        prob = tree_leaf_prob(self.forest_, 0, np.asarray(X, dtype=float), self.pruned_)
        return (prob >= 0.5).astype(int)


def prune_mask_at(forest: Forest, alpha: float) -> np.ndarray:
    """Weakest-link pruning: collapse internal nodes while the cheapest
    link costs at most ``alpha`` per saved leaf."""
    return prune_path(forest, [alpha])[0]


def prune_path(forest: Forest, alphas) -> list[np.ndarray]:
    """Pruned-node masks for each alpha (evaluated in ascending order).

    Weakest-link pruning is nested, so one pass over the tree yields the
    whole path; subtree risk and leaf counts are patched incrementally
    along the pruned node's ancestor chain.
    """
    n_nodes = len(forest.feature)
    total = forest.n_total[0]
    risk_node = np.minimum(forest.n_pos, forest.n_total - forest.n_pos) / max(total, 1e-300)
    risk_sub = risk_node.copy()
    leaves = np.ones(n_nodes, dtype=np.int64)
    parent = np.full(n_nodes, -1, dtype=np.int64)
    for node in range(n_nodes - 1, -1, -1):
        if forest.feature[node] >= 0:
            lc, rc = forest.left[node], forest.right[node]
            parent[lc] = parent[rc] = node
            risk_sub[node] = risk_sub[lc] + risk_sub[rc]
            leaves[node] = leaves[lc] + leaves[rc]

    pruned = np.zeros(n_nodes, dtype=bool)
    collapsible = (forest.feature >= 0)
    out: list[np.ndarray | None] = [None] * len(alphas)
    for pos in np.argsort(alphas, kind="stable"):
        alpha = alphas[pos]
        while True:
            idx = np.flatnonzero(collapsible)
            if len(idx) == 0:
                break
            g = (risk_node[idx] - risk_sub[idx]) / (leaves[idx] - 1)
            argbest = int(np.argmin(g))
            if g[argbest] > alpha + 1e-15:
                break
            best = int(idx[argbest])
            d_risk = risk_node[best] - risk_sub[best]
            d_leaves = 1 - leaves[best]
            pruned[best] = True
            risk_sub[best] = risk_node[best]
            leaves[best] = 1
            # the collapsed subtree is unreachable; drop it from the candidates
            stack = [best]
            while stack:
                node = stack.pop()
                if collapsible[node]:
                    collapsible[node] = False
                    stack.extend((int(forest.left[node]), int(forest.right[node])))
            node = parent[best]
            while node >= 0:
                risk_sub[node] += d_risk
                leaves[node] += d_leaves
                node = parent[node]
        out[pos] = pruned.copy()
    return out  # type: ignore[return-value]


# --- random forest ----------------------------------------------------------

class RandomForestClassifier:
    """Bagged gini trees; each split samples ``mtry`` candidate features."""

    def __init__(self, mtry: int, n_trees: int = 20, max_depth: int = 8, seed: int = 0):
        self.mtry = int(mtry)
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.seed = seed
        self.forest_: Forest | None = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n = len(y)
        rng = np.random.default_rng(np.random.SeedSequence([0x5F0,  self.seed]))
        thresholds, codes = bin_features(X)
        boot = np.stack(
            [np.bincount(rng.integers(0, n, n), minlength=n).astype(float) for _ in range(self.n_trees)]
        )
        self.forest_ = grow_forest(
            codes, thresholds, y, boot,
            max_depth=self.max_depth, mtry=min(self.mtry, X.shape[1]), rng=rng,
        )
        return self

    def predict_proba(self, X):
        X = np.asarray(X, dtype=float)
        acc = np.zeros(len(X))
        for root in self.forest_.roots:
            acc += tree_leaf_prob(self.forest_, int(root), X)
        return acc / len(self.forest_.roots)

    def predict(self, X):
        return (self.predict_proba(X) >= 0.5).astype(int)


# --- boosted shallow trees ---------------------------------------------------

class BoostedTreesClassifier:
    """Adaptive boosting of depth-2 gini trees for ``trials`` rounds.

    Rounds stop early when a stage is perfect or no better than chance.
    Stages are prefix-stable: a model with more trials extends, stage for
    stage, the model with fewer.
    """

    def __init__(self, trials: int, max_depth: int = 2):
        self.trials = int(trials)
        self.max_depth = max_depth
        self.stages_: list[tuple[Forest, float]] = []
        self.fallback_: int = 0

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        thresholds, codes = bin_features(X)
        self.stages_ = list(
            _boost_stages(codes, thresholds, y, X, self.trials, self.max_depth)
        )
        self.fallback_ = int(np.mean(y) >= 0.5)
        return self

    def decision_values(self, X):
        X = np.asarray(X, dtype=float)
        score = np.zeros(len(X))
        for forest, weight in self.stages_:
            pred = (tree_leaf_prob(forest, 0, X) >= 0.5).astype(float)
            score += weight * (2.0 * pred - 1.0)
        return score

    def predict(self, X):
        if not self.stages_:
            return np.full(len(X), self.fallback_, dtype=int)
        return (self.decision_values(X) >= 0.0).astype(int)


def _boost_stages(codes, thresholds, y, X, trials, max_depth):
    n = len(y)
    w = np.full(n, 1.0 / n)
    for _ in range(trials):
        forest = grow_forest(codes, thresholds, y, w[None, :], max_depth=max_depth)
        pred = (tree_leaf_prob(forest, 0, X) >= 0.5).astype(float)
        miss = pred != y
        err = float(w[miss].sum())
        if err >= 0.5:
            break
        if err <= 0.0:
            yield forest, 10.0  # perfect stage dominates the vote
            break
        stage_weight = 0.5 * np.log((1.0 - err) / err)
        yield forest, stage_weight
        w = w * np.exp(np.where(miss, stage_weight, -stage_weight))
        w /= w.sum()
