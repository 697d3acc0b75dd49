"""Histogram gradient-boosted trees for binary classification.

Features are assumed non-negative (TF-IDF). Every feature gets an implicit
zero bin (bin 0) followed by up to ``max_bins - 1`` quantile bins over its
nonzero values. Trees grow leaf-wise: the leaf with the largest split gain is
split next, until ``max_leaves`` leaves exist or no split gains anything.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (ShapeError, check_binary_labels, check_matrix,
                          check_two_classes)

# gains at or below this are treated as rounding noise
_MIN_GAIN = 1e-12
_PRIOR_CLAMP = math.log(1e6)


@dataclass
class Tree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf."""

    feature: np.ndarray
    bin_threshold: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    max_leaves: int
    gains: list = field(default_factory=list)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X_dense: np.ndarray) -> np.ndarray:
        node = np.zeros(X_dense.shape[0], dtype=np.int64)
        active = np.arange(X_dense.shape[0])
        while active.size:
            nd = node[active]
            feat = self.feature[nd]
            internal = feat >= 0
            active, nd, feat = active[internal], nd[internal], feat[internal]
            if not active.size:
                break
            go_left = X_dense[active, feat] <= self.threshold[nd]
            node[active] = np.where(go_left, self.left[nd], self.right[nd])
        return node

    def predict(self, X_dense: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X_dense)]

    def to_dict(self) -> dict:
        return {k: getattr(self, k).tolist() for k in
                ("feature", "bin_threshold", "threshold", "left", "right", "value")} | {
            "max_leaves": self.max_leaves}

    @classmethod
    def from_dict(cls, d: dict) -> "Tree":
        ints = ("feature", "bin_threshold", "left", "right")
        arrs = {k: np.asarray(d[k], dtype=np.int64 if k in ints else np.float64)
                for k in ("feature", "bin_threshold", "threshold", "left", "right", "value")}
        return cls(max_leaves=int(d["max_leaves"]), **arrs)


@dataclass
class GbdtModel:
    trees: list
    base_score: float
    shrinkage: float
    bin_edges: list
    n_features: int
    train_loss: list = field(default_factory=list)

    def raw_scores(self, X, chunk_rows: int = 1024) -> np.ndarray:
        X = check_matrix(X)
        if X.shape[1] != self.n_features:
            raise ShapeError(f"model expects {self.n_features} features, got {X.shape[1]}")
        out = np.full(X.shape[0], self.base_score)
        for start in range(0, X.shape[0], chunk_rows):
            block = X[start:start + chunk_rows]
            dense = block.toarray() if sp.issparse(block) else np.asarray(block)
            for tree in self.trees:
                out[start:start + dense.shape[0]] += tree.predict(dense)
        return out

    def to_dict(self) -> dict:
        return {"base_score": self.base_score, "shrinkage": self.shrinkage,
                "n_features": self.n_features,
                "bin_edges": [e.tolist() for e in self.bin_edges],
                "trees": [t.to_dict() for t in self.trees]}

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtModel":
        return cls([Tree.from_dict(t) for t in d["trees"]], float(d["base_score"]),
                   float(d["shrinkage"]), [np.asarray(e, dtype=np.float64) for e in d["bin_edges"]],
                   int(d["n_features"]))


def build_bins(X, max_bins: int = 255) -> list[np.ndarray]:
    """Per-feature upper bounds of the nonzero-value bins.

    A feature with ``k <= max_bins - 1`` distinct nonzero values gets one bin
    per value; otherwise bin ``j`` (1-based) ends at the sorted value with
    rank ``ceil(j * m / (max_bins - 1))``. Duplicate edges collapse.
    """
    if max_bins < 2:
        raise ValueError("max_bins must be at least 2")
    X = check_matrix(X)
    Xc = sp.csc_matrix(X)
    Xc.eliminate_zeros()
    if Xc.data.size and Xc.data.min() < 0:
        raise ValueError("histogram binning expects non-negative features")
    n_value_bins = max_bins - 1
    edges = []
    for j in range(Xc.shape[1]):
        vals = np.sort(Xc.data[Xc.indptr[j]:Xc.indptr[j + 1]])
        distinct = np.unique(vals)
        if distinct.size <= n_value_bins:
            edges.append(distinct)
            continue
        m = vals.size
        ranks = np.ceil(np.arange(1, n_value_bins + 1) * m / n_value_bins).astype(np.int64) - 1
        edges.append(np.unique(vals[ranks]))
    return edges


def bin_values(values: np.ndarray, edges: np.ndarray) -> np.ndarray:
    """Bin index for nonzero ``values`` of one feature (1-based; 0 is the zero bin)."""
    if edges.size == 0:
        return np.ones(values.shape, dtype=np.int64)
    return 1 + np.minimum(np.searchsorted(edges, values, side="left"), edges.size - 1)


def threshold_value(edges: np.ndarray, bin_threshold: int) -> float:
    return 0.0 if bin_threshold == 0 else float(edges[bin_threshold - 1])


def split_gain(GL, HL, GR, HR, lambda_l2):
    G, H = GL + GR, HL + HR
    return 0.5 * (GL * GL / (HL + lambda_l2) + GR * GR / (HR + lambda_l2) - G * G / (H + lambda_l2))


def _logloss(y, raw) -> float:
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


class _BinnedData:
    """Sparse training matrix re-expressed as flat histogram bin ids."""

    def __init__(self, X, edges):
        csr = sp.csr_matrix(X)
        csr.eliminate_zeros()
        n, d = csr.shape
        self.n_rows = n
        sizes = np.array([1 + e.size for e in edges], dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
        self.total_bins = int(sizes.sum())
        self.bin_feature = np.repeat(np.arange(d), sizes)
        self.bin_local = np.arange(self.total_bins) - self.offsets[self.bin_feature]
        # the last bin of each feature cannot be a threshold: nothing would go right
        self.last_bin = np.zeros(self.total_bins, dtype=bool)
        self.last_bin[self.offsets + sizes - 1] = True

        csc = sp.csc_matrix(csr)
        self.col_rows, self.col_bins = [], []
        for j in range(d):
            lo, hi = csc.indptr[j], csc.indptr[j + 1]
            self.col_rows.append(csc.indices[lo:hi])
            self.col_bins.append(bin_values(csc.data[lo:hi], edges[j]))
        # per-nonzero arrays in column-major order
        self.nnz_row = csc.indices.astype(np.int64)
        nnz_col = np.repeat(np.arange(d), np.diff(csc.indptr))
        local = np.concatenate(self.col_bins) if d else np.zeros(0, dtype=np.int64)
        self.nnz_flat = self.offsets[nnz_col] + local

    def histogram(self, rows, g, h):
        mask = np.zeros(self.n_rows, dtype=bool)
        mask[rows] = True
        sel = mask[self.nnz_row]
        flat, r = self.nnz_flat[sel], self.nnz_row[sel]
        G = np.bincount(flat, weights=g[r], minlength=self.total_bins)
        H = np.bincount(flat, weights=h[r], minlength=self.total_bins)
        C = np.bincount(flat, minlength=self.total_bins).astype(np.float64)
        for arr, total in ((G, g[rows].sum()), (H, h[rows].sum()), (C, float(len(rows)))):
            arr[self.offsets] = total - np.add.reduceat(arr, self.offsets)
        return G, H, C


@dataclass(eq=False)
class _Leaf:
    rows: np.ndarray
    hist: tuple
    node: int
    G: float
    H: float
    best: tuple | None = None


def _find_split(data: _BinnedData, hist, G, H, n_rows, cfg):
    Gh, Hh, Ch = hist
    seg_start = data.offsets[data.bin_feature]

    def left_sums(a):
        cs = np.cumsum(a)
        before = np.concatenate([[0.0], cs])[seg_start]
        return cs - before

    GL, HL, CL = left_sums(Gh), left_sums(Hh), left_sums(Ch)
    GR, HR, CR = G - GL, H - HL, n_rows - CL
    gain = split_gain(GL, HL, GR, HR, cfg["lambda_l2"])
    valid = (~data.last_bin & (HL >= cfg["min_child_weight"]) & (HR >= cfg["min_child_weight"])
             & (CL >= 1) & (CR >= 1))
    gain = np.where(valid, gain, -np.inf)
    if gain.size == 0:
        return None
    k = int(np.argmax(gain))  # first max: lowest feature, then lowest bin
    if not gain[k] > _MIN_GAIN:
        return None
    return float(gain[k]), int(data.bin_feature[k]), int(data.bin_local[k])


def grow_tree(data: _BinnedData, edges, g, h, cfg) -> tuple[Tree, np.ndarray]:
    """Grow one tree; returns it with each training row's leaf value."""
    feature, bthr, thr, left, right, value = [], [], [], [], [], []

    def new_node():
        for arr, v in ((feature, -1), (bthr, 0), (thr, 0.0), (left, -1), (right, -1), (value, 0.0)):
            arr.append(v)
        return len(feature) - 1

    def make_leaf(rows, hist):
        leaf = _Leaf(rows, hist, new_node(), float(g[rows].sum()), float(h[rows].sum()))
        leaf.best = _find_split(data, hist, leaf.G, leaf.H, len(rows), cfg)
        return leaf

    all_rows = np.arange(data.n_rows)
    root = make_leaf(all_rows, data.histogram(all_rows, g, h))
    heap, counter, leaves, gains = [], 0, [root], []

    def push(leaf):
        nonlocal counter
        if leaf.best is not None:
            heapq.heappush(heap, (-leaf.best[0], counter, leaf))
            counter += 1

    push(root)
    n_leaves = 1
    while heap and n_leaves < cfg["max_leaves"]:
        _, _, leaf = heapq.heappop(heap)
        gain, f, t = leaf.best
        goes_right = np.zeros(data.n_rows, dtype=bool)
        goes_right[data.col_rows[f][data.col_bins[f] > t]] = True
        r_mask = goes_right[leaf.rows]
        l_rows, r_rows = leaf.rows[~r_mask], leaf.rows[r_mask]
        # build the smaller child's histogram, derive the sibling by subtraction
        small, large = (l_rows, r_rows) if len(l_rows) <= len(r_rows) else (r_rows, l_rows)
        h_small = data.histogram(small, g, h)
        h_large = tuple(p - s for p, s in zip(leaf.hist, h_small))
        hist_l, hist_r = (h_small, h_large) if small is l_rows else (h_large, h_small)
        node = leaf.node
        feature[node], bthr[node], thr[node] = f, t, threshold_value(edges[f], t)
        lchild, rchild = make_leaf(l_rows, hist_l), make_leaf(r_rows, hist_r)
        left[node], right[node] = lchild.node, rchild.node
        leaves.remove(leaf)
        leaves.extend([lchild, rchild])
        gains.append(gain)
        n_leaves += 1
        push(lchild)
        push(rchild)

    row_values = np.zeros(data.n_rows)
    for leaf in leaves:
        v = -cfg["shrinkage"] * leaf.G / (leaf.H + cfg["lambda_l2"])
        value[leaf.node] = v
        row_values[leaf.rows] = v
    tree = Tree(np.array(feature, dtype=np.int64), np.array(bthr, dtype=np.int64),
                np.array(thr, dtype=np.float64), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value, dtype=np.float64),
                cfg["max_leaves"], gains)
    return tree, row_values


DEFAULTS = dict(n_trees=100, max_leaves=31, shrinkage=0.1, max_bins=255,
                lambda_l2=1.0, min_child_weight=1e-3)


def gbdt_train(X, y, **config) -> GbdtModel:
    """Boost ``n_trees`` Newton trees on the logistic loss."""
    unknown = set(config) - set(DEFAULTS)
    if unknown:
        raise TypeError(f"unknown GBDT options {sorted(unknown)}")
    cfg = {**DEFAULTS, **config}
    X = check_matrix(X)
    y = check_binary_labels(y, X.shape[0])
    check_two_classes(y)
    edges = build_bins(X, cfg["max_bins"])
    data = _BinnedData(X, edges)
    prior = y.mean()
    base = float(np.clip(math.log(prior / (1.0 - prior)), -_PRIOR_CLAMP, _PRIOR_CLAMP))
    raw = np.full(y.shape[0], base)
    trees, losses = [], [_logloss(y, raw)]
    for _ in range(cfg["n_trees"]):
        p = expit(raw)
        g, h = p - y, p * (1.0 - p)
        tree, row_values = grow_tree(data, edges, g, h, cfg)
        raw = raw + row_values
        trees.append(tree)
        losses.append(_logloss(y, raw))
    return GbdtModel(trees, base, cfg["shrinkage"], edges, X.shape[1], losses)


def gbdt_predict_proba(model: GbdtModel, X) -> np.ndarray:
    return expit(model.raw_scores(X))


class GbdtClassifier(ClassifierMixin, BaseEstimator):
    """Leaf-wise histogram gradient boosting (logistic loss).

    Parameters
    ----------
    n_trees, max_leaves, shrinkage, max_bins, lambda_l2, min_child_weight
        Boosting rounds, leaves per tree, learning rate, histogram size,
        L2 penalty on leaf values and minimum hessian sum per child.
    """

    def __init__(self, n_trees=100, max_leaves=31, shrinkage=0.1, max_bins=255,
                 lambda_l2=1.0, min_child_weight=1e-3):
        self.n_trees = n_trees
        self.max_leaves = max_leaves
        self.shrinkage = shrinkage
        self.max_bins = max_bins
        self.lambda_l2 = lambda_l2
        self.min_child_weight = min_child_weight

    def fit(self, X, y):
        self.model_ = gbdt_train(X, y, **self.get_params())
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.model_.n_features
        return self

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return self.model_.raw_scores(X)

    def predict_proba(self, X):
        p = expit(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X):
        return (self.decision_function(X) > 0).astype(np.int64)
