"""Binary classification and probabilistic quality metrics.

The positive (active) class is +1 throughout.  Empty denominators yield 0
rather than an error so cross-validation accumulation stays total.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvaluationReport:
    counts: ConfusionCounts
    precision: float
    sensitivity: float
    f1: float
    auc: float
    brier: Optional[float] = None
    threshold: Optional[float] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts)
        return d


def confusion(predicted: np.ndarray, actual: np.ndarray) -> ConfusionCounts:
    predicted = np.asarray(predicted)
    actual = np.asarray(actual)
    if predicted.shape != actual.shape or predicted.size < 1:
        raise ValueError("predicted and actual labels must be equal-length, non-empty")
    pos_pred = predicted == 1
    pos_act = actual == 1
    return ConfusionCounts(
        tp=int(np.count_nonzero(pos_pred & pos_act)),
        fp=int(np.count_nonzero(pos_pred & ~pos_act)),
        tn=int(np.count_nonzero(~pos_pred & ~pos_act)),
        fn=int(np.count_nonzero(~pos_pred & pos_act)),
    )


def precision_sensitivity_f1(c: ConfusionCounts) -> tuple[float, float, float]:
    precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) > 0 else 0.0
    sensitivity = c.tp / (c.tp + c.fn) if (c.tp + c.fn) > 0 else 0.0
    denom = precision + sensitivity
    f1 = 2.0 * precision * sensitivity / denom if denom > 0 else 0.0
    return precision, sensitivity, f1


def _midranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their rank range."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def auc(scores: np.ndarray, actual: np.ndarray) -> float:
    """Rank statistic with midranks for ties; equals the area under the ROC curve."""
    scores = np.asarray(scores, dtype=np.float64)
    actual = np.asarray(actual)
    if scores.shape != actual.shape:
        raise ValueError("scores and labels must have equal length")
    pos = actual == 1
    n_pos = int(np.count_nonzero(pos))
    n_neg = scores.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")
    ranks = _midranks(scores)
    return float((np.sum(ranks[pos]) - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def brier(probabilities: np.ndarray, actual: np.ndarray) -> float:
    """Mean squared gap between predicted probability and the 0/1 outcome."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    actual = np.asarray(actual)
    if probabilities.shape != actual.shape:
        raise ValueError("probabilities and labels must have equal length")
    if np.any(probabilities < 0.0) or np.any(probabilities > 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    outcomes = (actual == 1).astype(np.float64)
    return float(np.mean((probabilities - outcomes) ** 2))


def evaluate_labels(
    predicted: np.ndarray,
    actual: np.ndarray,
    scores: np.ndarray,
    probabilities: Optional[np.ndarray] = None,
    threshold: Optional[float] = None,
) -> EvaluationReport:
    """Bundle the confusion-based scores with AUC (and Brier when given)."""
    counts = confusion(predicted, actual)
    precision, sensitivity, f1 = precision_sensitivity_f1(counts)
    return EvaluationReport(
        counts=counts,
        precision=precision,
        sensitivity=sensitivity,
        f1=f1,
        auc=auc(scores, actual),
        brier=None if probabilities is None else brier(probabilities, actual),
        threshold=threshold,
    )
