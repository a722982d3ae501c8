"""Sigmoid calibration of raw decision scores into posterior probabilities.

The sigmoid is P(y=+1 | f) = 1 / (1 + exp(A f + B)); with this sign
convention higher scores map to higher probability only once the fitted A is
negative.  (A, B) minimize the cross-entropy against smoothed target
probabilities, using a dogleg trust-region Newton iteration on the 2x2
system.  All sigmoid evaluations branch on the sign of A f + B so neither
exp overflow nor 1 - p cancellation can occur.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataError

# Tikhonov shift added to the 2x2 cross-entropy Hessian.
HESSIAN_REGULARIZATION = 1e-12

# Probabilities entering log() are floored here to keep the objective finite
# in fully saturated configurations.
_LOG_FLOOR = 1e-300


@dataclass(frozen=True, eq=False)
class CalibrationSet:
    """Raw decision scores paired with their true labels."""

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        scores = np.asarray(self.scores, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.int64)
        if scores.shape != labels.shape or scores.ndim != 1:
            raise DataError("scores and labels must be equal-length vectors")
        if scores.size < 2:
            raise DataError("calibration needs at least two samples")
        if not np.all(np.isfinite(scores)):
            raise DataError("calibration scores must be finite")
        if not np.all(np.isin(labels, (-1, 1))):
            raise DataError("calibration labels must be -1 or +1")
        if np.all(labels == 1) or np.all(labels == -1):
            raise DataError("single-class calibration set")
        scores.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return self.scores.size

    def class_counts(self) -> tuple[int, int]:
        pos = int(np.count_nonzero(self.labels == 1))
        return pos, self.size - pos


@dataclass(frozen=True, eq=False)
class TargetProbabilities:
    """Smoothed labels: (N+ + 1)/(N+ + 2) for positives, 1/(N- + 2) for negatives."""

    t: np.ndarray
    n_pos: int
    n_neg: int


@dataclass(frozen=True)
class SigmoidCalibration:
    a: float
    b: float
    final_cross_entropy: float = math.nan
    newton_iterations: int = 0
    converged: bool = True


@dataclass(frozen=True)
class NewtonConfig:
    gradient_tol: float = 1e-8
    max_iterations: int = 100
    hessian_regularization: float = HESSIAN_REGULARIZATION
    initial_radius: float = 1.0
    shrink_factor: float = 0.25
    expand_factor: float = 2.0
    acceptance_ratio: float = 0.1

    def __post_init__(self):
        for name in ("gradient_tol", "max_iterations", "hessian_regularization",
                     "initial_radius", "shrink_factor", "expand_factor"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0.0 < self.acceptance_ratio <= 0.25):
            raise ValueError("acceptance_ratio must lie in (0, 0.25]")


def _check_finite(a, b, f):
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b)) and np.all(np.isfinite(f))):
        raise ValueError("sigmoid inputs must be finite")


def safe_sigmoid(a: float, b: float, f):
    """P = 1/(1 + exp(a f + b)) evaluated through the non-overflowing branch.

    For a f + b >= 0 the equivalent exp(-a f - b)/(1 + exp(-a f - b)) form is
    used, so the argument of exp never exceeds zero on that branch.
    """
    _check_finite(a, b, f)
    z = np.asarray(a * np.asarray(f, dtype=np.float64) + b)
    out = np.empty_like(z)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return float(out) if out.ndim == 0 else out


def safe_one_minus_p(a: float, b: float, f):
    """Stable 1 - P: 1/(1 + exp(-a f - b)) for a f + b >= 0, else the exp form."""
    _check_finite(a, b, f)
    z = np.asarray(a * np.asarray(f, dtype=np.float64) + b)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out) if out.ndim == 0 else out


def make_targets(cs: CalibrationSet) -> TargetProbabilities:
    n_pos, n_neg = cs.class_counts()
    t_pos = (n_pos + 1.0) / (n_pos + 2.0)
    t_neg = 1.0 / (n_neg + 2.0)
    t = np.where(cs.labels == 1, t_pos, t_neg)
    t.setflags(write=False)
    return TargetProbabilities(t=t, n_pos=n_pos, n_neg=n_neg)


def cross_entropy(
    params,
    cs: CalibrationSet,
    targets: TargetProbabilities,
    hessian_regularization: float = HESSIAN_REGULARIZATION,
):
    """Negative log-likelihood with its gradient and regularized 2x2 Hessian.

    value    = -sum t log p + (1 - t) log(1 - p)
    gradient = (sum f (t - p), sum (t - p))       [d/dA, d/dB]
    hessian  = [[sum f^2 pq, sum f pq], [sum f pq, sum pq]] + sigma I
    with q the stable 1 - p.
    """
    a, b = float(params[0]), float(params[1])
    f = cs.scores
    t = targets.t
    p = safe_sigmoid(a, b, f)
    q = safe_one_minus_p(a, b, f)
    value = -float(
        t @ np.log(np.maximum(p, _LOG_FLOOR))
        + (1.0 - t) @ np.log(np.maximum(q, _LOG_FLOOR))
    )
    residual = t - p
    gradient = np.array([float(f @ residual), float(np.sum(residual))])
    pq = p * q
    h_aa = float(f @ (f * pq))
    h_ab = float(f @ pq)
    h_bb = float(np.sum(pq))
    hessian = np.array([[h_aa, h_ab], [h_ab, h_bb]])
    hessian += hessian_regularization * np.eye(2)
    return value, gradient, hessian


def initial_sigmoid_guess(n_pos: int, n_neg: int) -> tuple[float, float]:
    """Start point for the Newton iteration: A = 0, B = log((l+ + 1)/(l- + 1))."""
    return 0.0, math.log((n_pos + 1.0) / (n_neg + 1.0))


def _dogleg_step(gradient, hessian, radius):
    """Minimize the local quadratic model within a trust-region disc."""
    newton = -np.linalg.solve(hessian, gradient)
    if np.linalg.norm(newton) <= radius:
        return newton
    ghg = float(gradient @ hessian @ gradient)
    cauchy = -(float(gradient @ gradient) / ghg) * gradient
    norm_cauchy = float(np.linalg.norm(cauchy))
    if norm_cauchy >= radius:
        return -(radius / float(np.linalg.norm(gradient))) * gradient
    # walk the dogleg segment from the Cauchy point to the Newton point
    # until it pierces the boundary
    leg = newton - cauchy
    aa = float(leg @ leg)
    bb = 2.0 * float(cauchy @ leg)
    cc = norm_cauchy ** 2 - radius ** 2
    tau = (-bb + math.sqrt(bb * bb - 4.0 * aa * cc)) / (2.0 * aa)
    return cauchy + tau * leg


def fit_platt(cs: CalibrationSet, cfg: NewtonConfig | None = None) -> SigmoidCalibration:
    """Fit (A, B) by trust-region Newton descent on the cross-entropy.

    Deterministic: identical inputs give bitwise identical parameters.
    """
    if cfg is None:
        cfg = NewtonConfig()
    targets = make_targets(cs)
    x = np.array(initial_sigmoid_guess(targets.n_pos, targets.n_neg))
    value, gradient, hessian = cross_entropy(x, cs, targets, cfg.hessian_regularization)
    radius = cfg.initial_radius
    iterations = 0
    converged = float(np.max(np.abs(gradient))) <= cfg.gradient_tol

    while not converged and iterations < cfg.max_iterations:
        # the regularized 2x2 Hessian must stay positive definite
        assert np.linalg.det(hessian) > 0 and np.trace(hessian) > 0, \
            "cross-entropy Hessian lost positive definiteness"
        step = _dogleg_step(gradient, hessian, radius)
        predicted = -(float(gradient @ step) + 0.5 * float(step @ hessian @ step))
        trial = x + step
        trial_value, trial_gradient, trial_hessian = cross_entropy(
            trial, cs, targets, cfg.hessian_regularization
        )
        iterations += 1
        if predicted <= 0 or not math.isfinite(trial_value):
            radius *= cfg.shrink_factor
            continue
        if predicted <= 1e-13 * (abs(value) + 1.0):
            # model decrease is below the objective's floating-point
            # resolution; the quadratic model is more trustworthy than the
            # subtraction, so take the step
            rho = 1.0
        else:
            rho = (value - trial_value) / predicted
        if rho < 0.25:
            radius *= cfg.shrink_factor
        elif rho > 0.75 and np.linalg.norm(step) >= radius * (1.0 - 1e-10):
            radius *= cfg.expand_factor
        if rho > cfg.acceptance_ratio:
            x, value, gradient, hessian = trial, trial_value, trial_gradient, trial_hessian
            if float(np.max(np.abs(gradient))) <= cfg.gradient_tol:
                converged = True

    return SigmoidCalibration(
        a=float(x[0]),
        b=float(x[1]),
        final_cross_entropy=value,
        newton_iterations=iterations,
        converged=converged,
    )


def calibrate_score(cal: SigmoidCalibration, f):
    """Posterior probability of the positive class for raw score(s) f."""
    return safe_sigmoid(cal.a, cal.b, f)
