"""L2-regularised logistic regression and a linear hinge-loss SVM.

Both minimise ``(lambda/2)||w||^2 + mean(loss(y_pm * (X @ w + b)))`` with
``y_pm`` in {-1, +1} and an unregularised bias. ``lambda`` defaults to
``1 / n_samples``, the same strength as ``C = 1`` in the summed-loss form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import (ShapeError, check_binary_labels, check_matrix,
                          check_two_classes)


@dataclass
class LinearModel:
    weights: np.ndarray
    bias: float
    kind: str
    reg_lambda: float
    solver_report: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("logistic", "hinge"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.reg_lambda > 0:
            raise ValueError("reg_lambda must be positive")

    def to_dict(self) -> dict:
        w = np.asarray(self.weights, dtype=np.float64)
        nz = np.flatnonzero(w)
        if nz.size < w.size // 2:
            weights = {"n": int(w.size), "indices": nz.tolist(), "values": w[nz].tolist()}
        else:
            weights = w.tolist()
        return {"kind": self.kind, "lambda": self.reg_lambda, "bias": self.bias,
                "weights": weights, "solver_report": self.solver_report}

    @classmethod
    def from_dict(cls, payload: dict) -> "LinearModel":
        raw = payload["weights"]
        if isinstance(raw, dict):
            w = np.zeros(raw["n"])
            w[np.asarray(raw["indices"], dtype=np.int64)] = raw["values"]
        else:
            w = np.asarray(raw, dtype=np.float64)
        return cls(w, float(payload["bias"]), payload["kind"], float(payload["lambda"]),
                   dict(payload.get("solver_report", {})))


def _prepare(X, y):
    X = check_matrix(X)
    y = check_binary_labels(y, X.shape[0])
    check_two_classes(y)
    return X, y, 2.0 * y - 1.0


def decision_scores(model: LinearModel, X) -> np.ndarray:
    X = check_matrix(X)
    if X.shape[1] != model.weights.shape[0]:
        raise ShapeError(f"model has {model.weights.shape[0]} weights, X has {X.shape[1]} columns")
    return np.asarray(X @ model.weights).ravel() + model.bias


def predict_labels(scores) -> np.ndarray:
    # ties go to class 0
    return (np.asarray(scores) > 0).astype(np.int64)


# logistic regression ---------------------------------------------------------

def lr_objective(w, b, X, y_pm, reg_lambda):
    """Objective value and gradient (w-part, b-part)."""
    margin = y_pm * (np.asarray(X @ w).ravel() + b)
    loss = np.logaddexp(0.0, -margin).mean() + 0.5 * reg_lambda * float(w @ w)
    r = -y_pm * expit(-margin) / margin.shape[0]
    grad_w = np.asarray(X.T @ r).ravel() + reg_lambda * w
    return loss, grad_w, float(r.sum())


def lr_train(X, y, reg_lambda=None, tol=1e-6, max_iter=1000, memory=10) -> LinearModel:
    """Full-batch L-BFGS with Armijo backtracking.

    Stops once the gradient's infinity norm is at most ``tol``. Every
    accepted step decreases the objective; the sequence of accepted values is
    kept in ``solver_report["objective_trace"]``.
    """
    X, y, y_pm = _prepare(X, y)
    n, d = X.shape
    lam = 1.0 / n if reg_lambda is None else float(reg_lambda)
    theta = np.zeros(d + 1)

    def fg(th):
        f, gw, gb = lr_objective(th[:d], th[d], X, y_pm, lam)
        return f, np.append(gw, gb)

    f, g = fg(theta)
    trace = [f]
    s_hist, y_hist = [], []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        if np.abs(g).max() <= tol:
            converged = True
            it -= 1
            break
        direction = _two_loop(g, s_hist, y_hist)
        slope = float(g @ direction)
        if slope >= 0:
            s_hist.clear()
            y_hist.clear()
            direction = -g
            slope = -float(g @ g)
        step = 1.0 if s_hist else min(1.0, 1.0 / np.abs(g).max())
        while True:
            cand = theta + step * direction
            f_new, g_new = fg(cand)
            if f_new <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step < 1e-16:
                break
        if not f_new < f:
            # no representable decrease left along any direction we can build
            converged = bool(np.abs(g).max() <= tol)
            break
        s_vec, y_vec = cand - theta, g_new - g
        if float(s_vec @ y_vec) > 1e-12:
            s_hist.append(s_vec)
            y_hist.append(y_vec)
            if len(s_hist) > memory:
                s_hist.pop(0)
                y_hist.pop(0)
        theta, f, g = cand, f_new, g_new
        trace.append(f)
    else:
        converged = bool(np.abs(g).max() <= tol)
    report = {"iterations": it, "final_objective": f, "converged": converged,
              "grad_inf_norm": float(np.abs(g).max()), "objective_trace": trace}
    return LinearModel(theta[:d].copy(), float(theta[d]), "logistic", lam, report)


def _two_loop(g, s_hist, y_hist):
    q = g.copy()
    alphas = []
    for s, yv in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(yv @ s)
        a = rho * float(s @ q)
        q -= a * yv
        alphas.append((rho, a))
    if s_hist:
        s, yv = s_hist[-1], y_hist[-1]
        q *= float(s @ yv) / float(yv @ yv)
    for (s, yv), (rho, a) in zip(zip(s_hist, y_hist), reversed(alphas)):
        bcoef = rho * float(yv @ q)
        q += (a - bcoef) * s
    return -q


def lr_predict_proba(model: LinearModel, X) -> np.ndarray:
    if model.kind != "logistic":
        raise ValueError("probabilities are only defined for the logistic model")
    return expit(decision_scores(model, X))


# linear SVM ------------------------------------------------------------------

def svm_objective(w, b, X, y_pm, reg_lambda) -> float:
    margin = y_pm * (np.asarray(X @ w).ravel() + b)
    return 0.5 * reg_lambda * float(w @ w) + np.maximum(0.0, 1.0 - margin).mean()


def best_hinge_bias(scores, y_pm) -> float:
    """Exact minimiser over b of ``sum(max(0, 1 - y * (s + b)))``.

    The objective is convex and piecewise linear with kinks at
    ``b = y_i - s_i``; when the minimiser is an interval its midpoint is
    returned.
    """
    kinks = y_pm - scores
    pos = np.sort(kinks[y_pm > 0])
    neg = np.sort(kinks[y_pm < 0])
    pos_suffix = np.concatenate([np.cumsum(pos[::-1])[::-1], [0.0]])
    neg_prefix = np.concatenate([[0.0], np.cumsum(neg)])
    cand = np.unique(kinks)
    # positives with kink > b contribute (kink - b); negatives with kink < b contribute (b - kink)
    ip = np.searchsorted(pos, cand, side="right")
    n_pos_above = pos.size - ip
    in_ = np.searchsorted(neg, cand, side="left")
    values = (pos_suffix[ip] - n_pos_above * cand) + (in_ * cand - neg_prefix[in_])
    best = values.min()
    at_min = cand[values <= best + 1e-12 * max(1.0, abs(best))]
    return float(0.5 * (at_min[0] + at_min[-1]))


def svm_train(X, y, reg_lambda=None, epochs=20, seed=0) -> LinearModel:
    """Seeded stochastic subgradient descent on the hinge objective.

    Step size is ``1 / (lambda * t)``. The returned weights average the
    iterates from the second half of training. The bias is not stepped: at the
    end of every epoch, and once more for the averaged weights, it is set to
    the exact hinge minimiser for the current weights.
    """
    X, y, y_pm = _prepare(X, y)
    X = sp.csr_matrix(X)
    n, d = X.shape
    lam = 1.0 / n if reg_lambda is None else float(reg_lambda)
    indptr, indices, data = X.indptr, X.indices, X.data
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    w_sum = np.zeros(d)
    n_avg = 0
    b = 0.0
    total = epochs * n
    avg_from = total // 2
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            lo, hi = indptr[i], indptr[i + 1]
            cols, vals = indices[lo:hi], data[lo:hi]
            margin = y_pm[i] * (float(w[cols] @ vals) + b)
            eta = 1.0 / (lam * t)
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w[cols] += eta * y_pm[i] * vals
            if t > avg_from:
                w_sum += w
                n_avg += 1
        b = best_hinge_bias(np.asarray(X @ w).ravel(), y_pm)
    w_bar = w_sum / max(n_avg, 1)
    b_bar = best_hinge_bias(np.asarray(X @ w_bar).ravel(), y_pm)
    obj = svm_objective(w_bar, b_bar, X, y_pm, lam)
    report = {"iterations": t, "final_objective": obj, "converged": None, "epochs": epochs}
    return LinearModel(w_bar, b_bar, "hinge", lam, report)


# estimators ------------------------------------------------------------------

class _LinearClassifier(ClassifierMixin, BaseEstimator):

    def decision_function(self, X):
        check_is_fitted(self, "model_")
        return decision_scores(self.model_, X)

    def predict(self, X):
        return predict_labels(self.decision_function(X))

    @property
    def coef_(self):
        check_is_fitted(self, "model_")
        return self.model_.weights[None, :]

    @property
    def intercept_(self):
        check_is_fitted(self, "model_")
        return np.array([self.model_.bias])


class LogisticRegressionClassifier(_LinearClassifier):
    """Binary L2 logistic regression trained with L-BFGS.

    Parameters
    ----------
    reg_lambda : float or None
        Ridge strength on the weights; ``None`` means ``1 / n_samples``.
    tol : float
        Target infinity norm of the gradient.
    max_iter : int
    """

    def __init__(self, reg_lambda=None, tol=1e-6, max_iter=1000):
        self.reg_lambda = reg_lambda
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        self.model_ = lr_train(X, y, self.reg_lambda, self.tol, self.max_iter)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.model_.weights.shape[0]
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "model_")
        p = lr_predict_proba(self.model_, X)
        return np.column_stack([1.0 - p, p])


class LinearSVMClassifier(_LinearClassifier):
    """Linear-kernel SVM trained by averaged stochastic subgradient descent.

    Scores are raw margins; no probability calibration is provided.
    """

    def __init__(self, reg_lambda=None, epochs=20, seed=0):
        self.reg_lambda = reg_lambda
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y):
        self.model_ = svm_train(X, y, self.reg_lambda, self.epochs, self.seed)
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = self.model_.weights.shape[0]
        return self
