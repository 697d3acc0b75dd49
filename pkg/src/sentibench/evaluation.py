"""Binary classification metrics, rank AUC and stratified k-fold CV.

Precision, recall and F1 are macro averages over the two classes. A ratio
with a zero denominator is reported as 0 and named in ``EvalReport.flags``.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.base import clone

from ._validation import ShapeError, check_binary_labels, labels_of
from .corpus_io import SplitMix64, StratificationError

METRIC_NAMES = ("accuracy", "auc", "recall", "precision", "f1", "kappa", "mcc")


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp


@dataclass
class EvalReport:
    accuracy: float
    auc: float
    recall: float
    precision: float
    f1: float
    kappa: float
    mcc: float
    wall_time_s: float = 0.0
    per_class: dict = field(default_factory=dict)
    confusion: dict | None = None
    flags: list = field(default_factory=list)

    def metrics(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_NAMES}

    def to_dict(self, include_time: bool = True) -> dict:
        d = asdict(self)
        d["per_class"] = {str(k): v for k, v in self.per_class.items()}
        if not include_time:
            d.pop("wall_time_s")
        return d


@dataclass
class CvResult:
    per_fold: list
    mean: EvalReport
    std: dict

    def to_dict(self, include_time: bool = True) -> dict:
        return {"mean": self.mean.to_dict(include_time), "std": self.std,
                "per_fold": [r.to_dict(include_time) for r in self.per_fold]}


def confusion(y_true, y_pred) -> ConfusionMatrix:
    y_true = check_binary_labels(y_true)
    y_pred = check_binary_labels(y_pred)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"{y_true.shape[0]} labels vs {y_pred.shape[0]} predictions")
    return ConfusionMatrix(
        tn=int(((y_true == 0) & (y_pred == 0)).sum()),
        fp=int(((y_true == 0) & (y_pred == 1)).sum()),
        fn=int(((y_true == 1) & (y_pred == 0)).sum()),
        tp=int(((y_true == 1) & (y_pred == 1)).sum()),
    )


def _ratio(num, den, flag, flags):
    if den == 0:
        flags.append(flag)
        return 0.0
    return num / den


def metrics_from_confusion(cm: ConfusionMatrix) -> dict:
    """Per-class and macro precision/recall/F1, accuracy, kappa and MCC."""
    if cm.total <= 0:
        raise ValueError("confusion matrix is empty")
    flags: list[str] = []
    n = cm.total
    per_class = {}
    # class 0 treats "negative" as the positive outcome
    for label, tp, fp, fn in ((0, cm.tn, cm.fn, cm.fp), (1, cm.tp, cm.fp, cm.fn)):
        p = _ratio(tp, tp + fp, f"precision[{label}]", flags)
        r = _ratio(tp, tp + fn, f"recall[{label}]", flags)
        f = _ratio(2 * p * r, p + r, f"f1[{label}]", flags)
        per_class[label] = {"precision": p, "recall": r, "f1": f, "support": tp + fn}
    accuracy = (cm.tp + cm.tn) / n
    true0, true1 = cm.tn + cm.fp, cm.fn + cm.tp
    pred0, pred1 = cm.tn + cm.fn, cm.fp + cm.tp
    p_e = (true0 * pred0 + true1 * pred1) / (n * n)
    kappa = _ratio(accuracy - p_e, 1.0 - p_e, "kappa", flags)
    mcc_den = math.sqrt(float(pred1) * true1 * true0 * pred0)
    mcc = _ratio(cm.tp * cm.tn - cm.fp * cm.fn, mcc_den, "mcc", flags)
    return {
        "accuracy": accuracy,
        "precision": (per_class[0]["precision"] + per_class[1]["precision"]) / 2,
        "recall": (per_class[0]["recall"] + per_class[1]["recall"]) / 2,
        "f1": (per_class[0]["f1"] + per_class[1]["f1"]) / 2,
        "kappa": kappa,
        "mcc": mcc,
        "per_class": per_class,
        "flags": flags,
    }


def roc_auc(scores, y_true) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) + 0.5 * P(tie)."""
    scores = np.asarray(scores, dtype=np.float64)
    y_true = check_binary_labels(y_true, scores.shape[0])
    n_pos = int(y_true.sum())
    n_neg = y_true.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC is undefined when only one class is present")
    ranks = rankdata(scores)  # average ranks give ties half credit
    u = ranks[y_true == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate(y_true, y_pred, scores=None, wall_time_s: float = 0.0) -> EvalReport:
    cm = confusion(y_true, y_pred)
    m = metrics_from_confusion(cm)
    flags = list(m["flags"])
    auc = 0.0
    if scores is None:
        flags.append("auc-unavailable")
    else:
        try:
            auc = roc_auc(scores, y_true)
        except ValueError:
            flags.append("auc")
    return EvalReport(
        accuracy=m["accuracy"], auc=auc, recall=m["recall"], precision=m["precision"],
        f1=m["f1"], kappa=m["kappa"], mcc=m["mcc"], wall_time_s=float(wall_time_s),
        per_class=m["per_class"], confusion=asdict(cm), flags=flags)


def stratified_kfold(y, k: int = 10, seed: int = 42) -> list[np.ndarray]:
    """Disjoint validation folds with per-class counts differing by at most 1.

    Each class (in label order) is shuffled with :class:`SplitMix64` and dealt
    round-robin; dealing continues from the fold where the previous class
    stopped, so total fold sizes also differ by at most 1.
    """
    y = np.asarray(y)
    if k < 2:
        raise ValueError("k must be at least 2")
    rng = SplitMix64(seed)
    folds = [[] for _ in range(k)]
    pos = 0
    for c in np.unique(y):
        members = np.flatnonzero(y == c).tolist()
        if len(members) < k:
            raise StratificationError(f"class {c} has {len(members)} members, fewer than k={k}")
        for idx in rng.shuffle(members):
            folds[pos % k].append(idx)
            pos += 1
    return [np.sort(np.asarray(f, dtype=np.int64)) for f in folds]


def _scores_of(model, X):
    if hasattr(model, "decision_function"):
        return np.asarray(model.decision_function(X), dtype=np.float64)
    if hasattr(model, "predict_proba"):
        return np.asarray(model.predict_proba(X))[:, 1]
    return None


def fit_and_evaluate(trainer, featurizer, train_docs, test_docs) -> tuple:
    """Fit ``featurizer`` + ``trainer`` on one part and score the other."""
    y_train, y_test = labels_of(train_docs), labels_of(test_docs)
    start = time.perf_counter()
    if featurizer is not None:
        X_train = featurizer.fit_transform(train_docs)
        X_test = featurizer.transform(test_docs)
    else:
        X_train, X_test = train_docs, test_docs
    trainer.fit(X_train, y_train)
    y_pred = np.asarray(trainer.predict(X_test))
    scores = _scores_of(trainer, X_test)
    elapsed = time.perf_counter() - start
    return evaluate(y_test, y_pred, scores, elapsed), trainer


def aggregate(reports: list[EvalReport]) -> tuple[EvalReport, dict]:
    mean = {m: float(np.mean([getattr(r, m) for r in reports])) for m in METRIC_NAMES}
    std = {m: float(np.std([getattr(r, m) for r in reports])) for m in METRIC_NAMES}
    per_class = {}
    for label in (0, 1):
        per_class[label] = {
            key: float(np.mean([r.per_class[label][key] for r in reports]))
            for key in ("precision", "recall", "f1", "support")}
    flags = sorted({f for r in reports for f in r.flags})
    wall = float(np.mean([r.wall_time_s for r in reports]))
    return EvalReport(per_class=per_class, wall_time_s=wall, flags=flags, **mean), std


def cross_validate(trainer, featurizer, docs, k: int = 10, seed: int = 42,
                   n_jobs: int = 1) -> CvResult:
    """Stratified k-fold CV over token documents.

    The featurizer (e.g. TF-IDF + MinMax pipeline) and the trainer are cloned
    per fold and fit on the training folds only. Fold results keep fold order
    even when run on several threads.
    """
    docs = list(docs)
    y = labels_of(docs)
    folds = stratified_kfold(y, k, seed)

    def run(fold):
        held = np.zeros(len(docs), dtype=bool)
        held[fold] = True
        train = [d for d, h in zip(docs, held) if not h]
        test = [d for d, h in zip(docs, held) if h]
        feat = clone(featurizer) if featurizer is not None else None
        report, _ = fit_and_evaluate(clone(trainer), feat, train, test)
        return report

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(run, folds))
    else:
        reports = [run(f) for f in folds]
    mean, std = aggregate(reports)
    return CvResult(reports, mean, std)


# text tables -----------------------------------------------------------------

def _table(header, rows, aligns) -> str:
    widths = [max(len(str(c)) for c in col) for col in zip(header, *rows)]
    lines = []
    for row in [header] + rows:
        cells = [str(c).ljust(w) if a == "l" else str(c).rjust(w)
                 for c, w, a in zip(row, widths, aligns)]
        lines.append("  ".join(cells).rstrip())
    rule = "-" * len(lines[0])
    return "\n".join([lines[0], rule] + lines[1:]) + "\n"


def format_cv_table(rows: list[tuple[str, EvalReport]], include_time: bool = True) -> str:
    """Model, Acc., AUC, Recall, Prec., F1, Kappa, MCC[, Time (s)] rows."""
    header = ["Model", "Acc.", "AUC", "Recall", "Prec.", "F1", "Kappa", "MCC"]
    if include_time:
        header.append("Time (s)")
    body = []
    for name, r in rows:
        cells = [name] + [f"{getattr(r, m):.4f}" for m in
                          ("accuracy", "auc", "recall", "precision", "f1", "kappa", "mcc")]
        if include_time:
            cells.append(f"{r.wall_time_s:.3f}")
        body.append(cells)
    return _table(header, body, ["l"] + ["r"] * (len(header) - 1))


def format_class_report(report: EvalReport) -> str:
    names = {0: "Negative (0)", 1: "Positive (1)"}
    body = []
    for label in (0, 1):
        pc = report.per_class[label]
        body.append([names[label], f"{pc['precision']:.4f}", f"{pc['recall']:.4f}",
                     f"{pc['f1']:.4f}", f"{int(round(pc['support'])):,}"])
    support = sum(int(round(report.per_class[c]["support"])) for c in (0, 1))
    body.append(["Macro Avg", f"{report.precision:.4f}", f"{report.recall:.4f}",
                 f"{report.f1:.4f}", f"{support:,}"])
    return _table(["Class", "Precision", "Recall", "F1-Score", "Support"], body,
                  ["l", "r", "r", "r", "r"])


def format_benchmark_table(rows: list[tuple[str, str, float, float]]) -> str:
    body = [[approach, model, f"{acc * 100:.2f}%", f"{f1 * 100:.2f}%"]
            for approach, model, acc, f1 in rows]
    return _table(["Approach", "Best Model", "Accuracy", "F1-Score"], body,
                  ["l", "l", "r", "r"])
