"""Classification metrics for sign prediction (positive class = +1)."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata

from .errors import UndefinedMetricError

METRIC_NAMES = ("auc", "f1", "micro_f1", "macro_f1")


@dataclass(frozen=True)
class Metrics:
    auc: float
    f1: float
    micro_f1: float
    macro_f1: float

    def to_dict(self) -> dict:
        return asdict(self)


def _as_pm1(a, name):
    a = np.asarray(a).reshape(-1)
    if not np.all(np.isin(a, (1, -1))):
        raise ValueError(f"{name} must contain only +1 / -1")
    return a


def auc(scores, labels) -> float:
    """Mann-Whitney AUC: P(score of a random positive > random negative), ties count 1/2."""
    scores = np.asarray(scores, dtype=float).reshape(-1)
    labels = _as_pm1(labels, "labels")
    if len(scores) != len(labels):
        raise ValueError("scores and labels differ in length")
    pos = labels > 0
    n_pos = int(pos.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("AUC needs both positive and negative labels")
    ranks = rankdata(scores)  # average ranks handle ties
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def f1_suite(preds, labels) -> tuple[float, float, float]:
    """(F1 of the positive class, micro-F1, macro-F1)."""
    preds = _as_pm1(preds, "preds")
    labels = _as_pm1(labels, "labels")
    if len(preds) != len(labels):
        raise ValueError("preds and labels differ in length")
    if len(preds) == 0:
        raise ValueError("need at least one prediction")
    tp = int(np.sum((preds > 0) & (labels > 0)))
    tn = int(np.sum((preds < 0) & (labels < 0)))
    fp = int(np.sum((preds > 0) & (labels < 0)))
    fn = int(np.sum((preds < 0) & (labels > 0)))
    f1_pos = _f1(tp, fp, fn)
    f1_neg = _f1(tn, fn, fp)
    # pooled over both classes: every error is one FP and one FN
    micro = _f1(tp + tn, fp + fn, fn + fp)
    return float(f1_pos), float(micro), float((f1_pos + f1_neg) / 2)


def evaluate(scores, labels, threshold: float = 0.5) -> Metrics:
    scores = np.asarray(scores, dtype=float)
    preds = np.where(scores >= threshold, 1, -1)
    f1, micro, macro = f1_suite(preds, labels)
    return Metrics(auc=auc(scores, labels), f1=f1, micro_f1=micro, macro_f1=macro)
