"""Slow, obviously-correct reference implementations used as test oracles."""

from __future__ import annotations

import itertools
import math

import numpy as np


def dense_tfidf(docs, min_df=1, max_df=1.0, max_features=None, ngram_range=(1, 2),
                sublinear_tf=True):
    """Plain-Python TF-IDF: returns (terms, idf list, dense row lists)."""
    n = len(docs)

    def grams(tokens):
        out = []
        for k in range(ngram_range[0], ngram_range[1] + 1):
            for i in range(len(tokens) - k + 1):
                out.append(" ".join(tokens[i:i + k]))
        return out

    df = {}
    for tokens in docs:
        for g in set(grams(tokens)):
            df[g] = df.get(g, 0) + 1

    def bound(v):
        return float(v) if isinstance(v, int) else v * n

    lo, hi = bound(min_df), bound(max_df)
    candidates = [t for t in df if lo <= df[t] <= hi]
    # top-k by df, smaller term first on ties: selection by repeated scanning
    chosen = []
    pool = list(candidates)
    while pool and (max_features is None or len(chosen) < max_features):
        best = None
        for t in pool:
            if best is None or df[t] > df[best] or (df[t] == df[best] and t < best):
                best = t
        chosen.append(best)
        pool.remove(best)
    terms = sorted(chosen)
    idf = [math.log((1 + n) / (1 + df[t])) + 1 for t in terms]
    rows = []
    for tokens in docs:
        g = grams(tokens)
        row = []
        for t, w in zip(terms, idf):
            c = g.count(t)
            if c == 0:
                row.append(0.0)
            else:
                row.append(((1 + math.log(c)) if sublinear_tf else c) * w)
        norm = math.sqrt(sum(v * v for v in row))
        rows.append([v / norm for v in row] if norm > 0 else row)
    return terms, idf, rows


def grid_minimize(objective, bounds, steps=41, rounds=8, shrink=0.25):
    """Exhaustive grid search with repeated zoom around the incumbent.

    ``objective`` maps an (m, dim) array of points to m values.
    """
    centre = np.array([(lo + hi) / 2 for lo, hi in bounds], dtype=np.float64)
    half = np.array([(hi - lo) / 2 for lo, hi in bounds], dtype=np.float64)
    best_x, best_f = None, math.inf
    for _ in range(rounds):
        axes = [np.linspace(c - h, c + h, steps) for c, h in zip(centre, half)]
        pts = np.array(list(itertools.product(*axes)))
        vals = objective(pts)
        i = int(np.argmin(vals))
        if vals[i] < best_f:
            best_f, best_x = float(vals[i]), pts[i]
        centre = best_x
        half = half * shrink
    return best_x, best_f


def lr_objective_batch(points, X, y, lam):
    """Mean log-loss + lam/2 |w|^2 for each row (w..., b) of ``points``."""
    y_pm = 2.0 * np.asarray(y) - 1.0
    W, b = points[:, :-1], points[:, -1]
    margins = y_pm[None, :] * (W @ X.T + b[:, None])
    return np.logaddexp(0.0, -margins).mean(axis=1) + 0.5 * lam * (W * W).sum(axis=1)


def svm_objective_batch(points, X, y, lam):
    y_pm = 2.0 * np.asarray(y) - 1.0
    W, b = points[:, :-1], points[:, -1]
    margins = y_pm[None, :] * (W @ X.T + b[:, None])
    return np.maximum(0.0, 1.0 - margins).mean(axis=1) + 0.5 * lam * (W * W).sum(axis=1)


def pairwise_auc(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def central_difference(f, params: dict, step: float) -> dict:
    """Numerical gradient of scalar ``f(params)`` by central differences, in place."""
    grads = {}
    for name, p in params.items():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = f(params)
            flat[i] = orig - step
            down = f(params)
            flat[i] = orig
            gflat[i] = (up - down) / (2 * step)
        grads[name] = g
    return grads


def max_relative_error(a, b, floor=1e-6) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    den = np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)
    return float((np.abs(a - b) / den).max()) if a.size else 0.0
