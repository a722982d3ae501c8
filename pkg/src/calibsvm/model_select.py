"""Hyperparameter search over the penalty C and probability-threshold selection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import AugmentedDataset, DataError, augment, stratified_kfold
from .metrics import confusion, precision_sensitivity_f1
from .qp import SolverConfig
from .svm import LossVariant, predict_labels, train

DEFAULT_C_EXPONENTS = tuple(range(-7, 8))


@dataclass(frozen=True)
class GridSpec:
    """Penalty grid C = 2**p over the given exponents, with k-fold CV settings."""

    exponents: tuple = DEFAULT_C_EXPONENTS
    folds: int = 3
    seed: int = 0

    def __post_init__(self):
        if len(self.exponents) == 0:
            raise ValueError("exponent grid is empty")
        if self.folds < 2:
            raise ValueError("folds must be at least 2")

    @property
    def c_values(self) -> list[float]:
        return [2.0 ** p for p in self.exponents]


@dataclass(frozen=True)
class FoldMetrics:
    precision: float
    sensitivity: float
    f1: float


@dataclass(frozen=True)
class GridPoint:
    c: float
    accumulated_score: float       # sum over folds of (precision + sensitivity)
    fold_metrics: tuple

    @property
    def mean_score(self) -> float:
        return self.accumulated_score / len(self.fold_metrics)


@dataclass(frozen=True)
class CvResult:
    per_c: tuple
    best_c: float
    hessian_applications: int = 0


def grid_search_c(
    d: AugmentedDataset,
    loss: LossVariant,
    grid: GridSpec | None = None,
    cfg: SolverConfig | None = None,
) -> CvResult:
    """Pick the penalty whose accumulated CV precision + sensitivity is largest.

    One stratified fold assignment (from grid.seed) is shared by every grid
    point; ties go to the smaller C.
    """
    if grid is None:
        grid = GridSpec()
    folds = stratified_kfold(d.base, grid.folds, grid.seed)
    points = []
    applications = 0
    for c in grid.c_values:
        fold_metrics = []
        total = 0.0
        for train_idx, val_idx in folds:
            model = train(augment(d.base.subset(train_idx), d.gamma), loss, c, cfg)
            applications += model.training_diagnostics.hessian_applications
            predicted = predict_labels(model, d.base.features[val_idx])
            pre, sen, f1 = precision_sensitivity_f1(
                confusion(predicted, d.base.labels[val_idx])
            )
            total += pre + sen
            fold_metrics.append(FoldMetrics(precision=pre, sensitivity=sen, f1=f1))
        points.append(GridPoint(c=c, accumulated_score=total, fold_metrics=tuple(fold_metrics)))

    best = None
    for point in sorted(points, key=lambda p: p.c):
        if best is None or point.accumulated_score > best.accumulated_score:
            best = point
    return CvResult(per_c=tuple(points), best_c=best.c, hessian_applications=applications)


@dataclass(frozen=True)
class ThresholdResult:
    threshold: float
    precision: float
    sensitivity: float
    f1: float
    feasible: bool


def select_threshold(
    probabilities: np.ndarray, labels: np.ndarray, step: float = 0.01
) -> ThresholdResult:
    """Scan thresholds {step, 2 step, ..., 1 - step} for balanced class relevance.

    Among thresholds with F1 > 0.5 the one minimizing |precision -
    sensitivity| wins (ties: larger F1, then smaller threshold).  When no
    threshold clears the F1 bar the best-F1 threshold is returned flagged
    infeasible.
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels)
    if not (0.0 < step <= 0.5):
        raise ValueError("step must lie in (0, 0.5]")
    if np.all(labels == 1) or np.all(labels == -1):
        raise DataError("threshold selection needs both classes present")

    thresholds = step * np.arange(1, int(round(1.0 / step)))
    best_key = None
    best = None
    fallback_key = None
    fallback = None
    for thr in thresholds:
        predicted = np.where(probabilities > thr, 1, -1)
        pre, sen, f1 = precision_sensitivity_f1(confusion(predicted, labels))
        candidate = ThresholdResult(
            threshold=float(thr), precision=pre, sensitivity=sen, f1=f1, feasible=True
        )
        key = (abs(pre - sen), -f1, thr)
        if f1 > 0.5 and (best_key is None or key < best_key):
            best_key, best = key, candidate
        fb_key = (-f1, thr)
        if fallback_key is None or fb_key < fallback_key:
            fallback_key, fallback = fb_key, candidate
    if best is not None:
        return best
    return ThresholdResult(
        threshold=fallback.threshold,
        precision=fallback.precision,
        sensitivity=fallback.sensitivity,
        f1=fallback.f1,
        feasible=False,
    )
