"""CART regression trees and a bootstrap random forest.

Trees are grown depth-first by a compiled builder. Bootstrap resamples are
expressed as integer row weights (the number of times a row was drawn), so
a tree never materialises duplicated rows.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np


@dataclass(frozen=True)
class TreeParams:
    max_depth: int | None = None
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_features: object = "all"  # "all", "sqrt" or a fraction in (0, 1]
    seed: int = 0

    def n_features(self, d: int) -> int:
        mf = self.max_features
        if mf == "all" or mf is None:
            return d
        if mf == "sqrt":
            return max(1, int(np.sqrt(d)))
        return max(1, min(d, int(float(mf) * d)))


@dataclass(frozen=True, eq=False)
class RegressionTree:
    """Flat node arrays; ``feature[k] == -1`` marks a leaf.

    Routing is ``x[feature] <= threshold`` to the left child.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    weight: np.ndarray  # weighted sample count per node
    impurity_decrease: np.ndarray  # w_node*var_node - w_L*var_L - w_R*var_R
    n_features: int

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    def predict(self, X) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=float)
        return _tree_predict(X, self.feature, self.threshold, self.left, self.right, self.value)

    def raw_importance(self) -> np.ndarray:
        """Per-feature total impurity decrease, divided by the root weight."""
        imp = np.zeros(self.n_features)
        split = self.feature >= 0
        np.add.at(imp, self.feature[split], self.impurity_decrease[split])
        return imp / self.weight[0]


@numba.njit(cache=True, nogil=True)
def _tree_predict(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        k = 0
        while feature[k] >= 0:
            if X[r, feature[k]] <= threshold[k]:
                k = left[k]
            else:
                k = right[k]
        out[r] = value[k]
    return out


@numba.njit(cache=True, nogil=True)
def _build(X, y, w, max_depth, min_split, min_leaf, n_try, seed):
    np.random.seed(seed)
    d = X.shape[1]
    rows = np.flatnonzero(w > 0)
    m = rows.shape[0]
    cap = 2 * m + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    weight = np.zeros(cap)
    decrease = np.zeros(cap)

    # stack of (start, end, depth, node id)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_node = np.empty(cap, dtype=np.int64)
    top = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    st_node[0] = 0
    top = 1
    n_nodes = 1
    feats = np.arange(d)
    vals = np.empty(m)
    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        node = st_node[top]
        sw = 0.0
        swy = 0.0
        ymin = np.inf
        ymax = -np.inf
        for p in range(start, end):
            r = rows[p]
            sw += w[r]
            swy += w[r] * y[r]
            if y[r] < ymin:
                ymin = y[r]
            if y[r] > ymax:
                ymax = y[r]
        value[node] = ymin if ymin == ymax else swy / sw
        weight[node] = sw
        count = end - start
        if (max_depth >= 0 and depth >= max_depth) or count < min_split or count < 2 * min_leaf or ymin == ymax:
            continue

        # candidate features: random subset, examined in increasing index order
        if n_try < d:
            for t in range(d):
                feats[t] = t
            for t in range(n_try):
                s = t + np.random.randint(d - t)
                tmp = feats[t]
                feats[t] = feats[s]
                feats[s] = tmp
            cand = np.sort(feats[:n_try])
        else:
            cand = np.arange(d)

        parent_proxy = swy * swy / sw
        best_gain = 0.0
        best_f = -1
        best_thr = 0.0
        for f in cand:
            for p in range(start, end):
                vals[p - start] = X[rows[p], f]
            order = np.argsort(vals[:count], kind="mergesort")
            if vals[order[0]] == vals[order[count - 1]]:
                continue
            lw = 0.0
            ly = 0.0
            for q in range(count - 1):
                r = rows[start + order[q]]
                lw += w[r]
                ly += w[r] * y[r]
                v0 = vals[order[q]]
                v1 = vals[order[q + 1]]
                if v0 == v1:
                    continue
                if q + 1 < min_leaf or count - q - 1 < min_leaf:
                    continue
                rw = sw - lw
                ry = swy - ly
                gain = ly * ly / lw + ry * ry / rw - parent_proxy
                if gain > best_gain:
                    best_gain = gain
                    best_f = f
                    thr = v0 / 2.0 + v1 / 2.0
                    if thr >= v1 or thr < v0:
                        thr = v0
                    best_thr = thr
        if best_f < 0:
            continue

        # partition rows[start:end] in place on the chosen split
        lo = start
        hi = end - 1
        while lo <= hi:
            if X[rows[lo], best_f] <= best_thr:
                lo += 1
            else:
                tmp = rows[lo]
                rows[lo] = rows[hi]
                rows[hi] = tmp
                hi -= 1
        feature[node] = best_f
        threshold[node] = best_thr
        decrease[node] = best_gain
        lnode = n_nodes
        rnode = n_nodes + 1
        n_nodes += 2
        left[node] = lnode
        right[node] = rnode
        # push right first so the left subtree is built first
        st_start[top] = lo
        st_end[top] = end
        st_depth[top] = depth + 1
        st_node[top] = rnode
        top += 1
        st_start[top] = start
        st_end[top] = lo
        st_depth[top] = depth + 1
        st_node[top] = lnode
        top += 1
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), weight[:n_nodes].copy(),
            decrease[:n_nodes].copy())


def tree_fit(X, y, params: TreeParams = TreeParams(), sample_weight=None) -> RegressionTree:
    """Greedy CART by weighted variance reduction.

    Split candidates are midpoints between consecutive distinct values; the
    first strictly best candidate wins, which breaks ties toward the smaller
    feature index and then the smaller threshold.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    w = np.ones(len(y)) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=float)
    if params.min_samples_split < 2 or params.min_samples_leaf < 1:
        raise ValueError("min_samples_split >= 2 and min_samples_leaf >= 1 required")
    depth = -1 if params.max_depth is None else int(params.max_depth)
    arrays = _build(X, y, w, depth, int(params.min_samples_split), int(params.min_samples_leaf),
                    params.n_features(X.shape[1]), int(params.seed) % (2**32))
    return RegressionTree(*arrays, n_features=X.shape[1])


@dataclass(frozen=True, eq=False)
class RandomForest:
    trees: tuple
    seeds: tuple  # per-tree (bootstrap_seed, feature_seed)
    n_estimators: int
    bootstrap: bool

    def predict(self, X) -> np.ndarray:
        return forest_predict(self, X)


def _tree_seeds(seed: int, n_estimators: int):
    children = np.random.SeedSequence(seed).spawn(n_estimators)
    return tuple(tuple(int(v) for v in c.generate_state(2)) for c in children)


def forest_fit(X, y, n_estimators: int = 100, params: TreeParams = TreeParams(),
               bootstrap: bool = True, n_jobs: int = 1) -> RandomForest:
    """Bootstrap forest; per-tree seeds are fixed before any tree is grown."""
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float).ravel()
    n = len(y)
    seeds = _tree_seeds(params.seed, n_estimators)

    def grow(s):
        boot_seed, feat_seed = s
        w = None
        if bootstrap:
            draws = np.random.default_rng(boot_seed).integers(0, n, size=n)
            w = np.bincount(draws, minlength=n).astype(float)
        tp = TreeParams(params.max_depth, params.min_samples_split, params.min_samples_leaf,
                        params.max_features, feat_seed)
        return tree_fit(X, y, tp, sample_weight=w)

    if n_jobs == 1:
        trees = [grow(s) for s in seeds]
    else:
        with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as ex:
            trees = list(ex.map(grow, seeds))
    return RandomForest(tuple(trees), seeds, n_estimators, bootstrap)


def forest_predict(f: RandomForest, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    total = np.zeros(X.shape[0])
    for t in f.trees:
        total += t.predict(X)
    return total / len(f.trees)


def impurity_importance(f) -> np.ndarray:
    """Mean over trees of per-feature impurity decrease, normalised to sum 1.

    Accepts a forest or a single tree. All-zero stays all-zero.
    """
    trees = f.trees if isinstance(f, RandomForest) else (f,)
    imp = np.mean([t.raw_importance() for t in trees], axis=0)
    total = imp.sum()
    return imp / total if total > 0 else imp
