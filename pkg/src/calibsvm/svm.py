"""Linear SVM with the offset folded into an augmented coordinate.

Builds the hinge-loss dual problems, trains them through the QP solver and
reconstructs the primal normal vector.  Both the l1 (linear hinge, box
constrained dual) and l2 (squared hinge, lower-bound dual with a C^-1 shift)
variants are supported.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .data import AugmentedDataset, DataError
from .qp import QpProblem, QpSolution, SolverConfig, mprgp_solve

# Every dual variable starts at this fraction of the penalty C.
INITIAL_GUESS_FACTOR = 0.99


class LossVariant(enum.Enum):
    L1_HINGE = "l1"
    L2_SQUARED_HINGE = "l2"


@dataclass(frozen=True)
class SvmModel:
    """Trained separating hyperplane in augmented coordinates.

    w_hat has one more entry than the feature count; the last entry B yields
    the implied offset b = B * gamma.
    """

    w_hat: np.ndarray
    gamma: float
    loss: LossVariant
    penalty_c: float
    training_diagnostics: QpSolution | None = None

    def __post_init__(self):
        w = np.asarray(self.w_hat, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "w_hat", w)
        if self.penalty_c <= 0:
            raise ValueError("penalty_c must be positive")

    @property
    def n_features(self) -> int:
        return self.w_hat.size - 1

    @property
    def bias(self) -> float:
        return float(self.w_hat[-1] * self.gamma)


@dataclass(frozen=True)
class HingeStats:
    """Per-sample margin violations; sum_xi is squared under the l2 loss."""

    xi: np.ndarray
    sum_xi: float
    margin_violations: int


def _check_two_classes(labels: np.ndarray) -> None:
    if np.all(labels == 1) or np.all(labels == -1):
        raise DataError("single-class dataset")


def assemble_dual(d: AugmentedDataset, loss: LossVariant, c: float) -> QpProblem:
    """Dual QP of the chosen loss: linear term -e, bounds [0, C] or [0, inf).

    The Hessian acts as v -> Y (Xhat^T (Xhat (Y v))), plus v/C for the l2
    variant, so the Gramian is never assembled.
    """
    if c <= 0:
        raise ValueError(f"penalty must be positive, got {c}")
    _check_two_classes(d.base.labels)
    features = d.features
    y = d.base.labels.astype(np.float64)
    m = d.m

    if loss is LossVariant.L1_HINGE:
        def hessian_apply(v):
            return y * (features @ (features.T @ (y * v)))
        upper = np.full(m, float(c))
    else:
        inv_c = 1.0 / c

        def hessian_apply(v):
            return y * (features @ (features.T @ (y * v))) + inv_c * v
        upper = None

    return QpProblem(
        hessian_apply=hessian_apply,
        linear_term=-np.ones(m),
        lower_bound=np.zeros(m),
        upper_bound=upper,
    )


def initial_dual_guess(c: float, m: int) -> np.ndarray:
    return np.full(m, INITIAL_GUESS_FACTOR * c)


def train(
    d: AugmentedDataset,
    loss: LossVariant,
    c: float,
    cfg: SolverConfig | None = None,
) -> SvmModel:
    """Solve the dual and reconstruct w_hat = Xhat Y alpha.

    Non-convergence at the configured tolerance is not fatal; it is recorded
    in the model's training diagnostics.
    """
    problem = assemble_dual(d, loss, c)
    solution = mprgp_solve(problem, initial_dual_guess(c, d.m), cfg)
    y = d.base.labels.astype(np.float64)
    w_hat = d.features.T @ (y * solution.alpha)
    return SvmModel(
        w_hat=w_hat,
        gamma=d.gamma,
        loss=loss,
        penalty_c=float(c),
        training_diagnostics=solution,
    )


def raw_score(model: SvmModel, x: np.ndarray) -> float:
    """Decision value <w_hat, (x; gamma)> for one unaugmented sample."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.n_features,):
        raise ValueError(
            f"sample has {x.size} features, model expects {model.n_features}"
        )
    return float(model.w_hat[:-1] @ x + model.w_hat[-1] * model.gamma)


def raw_scores(model: SvmModel, features: np.ndarray) -> np.ndarray:
    """Decision values for a matrix of unaugmented samples (one per row)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.n_features:
        raise ValueError(
            f"feature matrix has {features.shape[1] if features.ndim == 2 else '?'} "
            f"columns, model expects {model.n_features}"
        )
    return features @ model.w_hat[:-1] + model.w_hat[-1] * model.gamma


def predict_label(model: SvmModel, x: np.ndarray) -> int:
    """Sign of the raw score; an exact zero maps to +1."""
    return 1 if raw_score(model, x) >= 0.0 else -1


def predict_labels(model: SvmModel, features: np.ndarray) -> np.ndarray:
    return np.where(raw_scores(model, features) >= 0.0, 1, -1)


def hinge_stats(model: SvmModel, d: AugmentedDataset) -> HingeStats:
    scores = d.features @ model.w_hat
    xi = np.maximum(0.0, 1.0 - d.base.labels * scores)
    if model.loss is LossVariant.L2_SQUARED_HINGE:
        total = float(np.sum(xi ** 2))
    else:
        total = float(np.sum(xi))
    return HingeStats(xi=xi, sum_xi=total, margin_violations=int(np.count_nonzero(xi > 0)))


def primal_objective(model: SvmModel, d: AugmentedDataset) -> float:
    """1/2 <w_hat, w_hat> + (C/p) * sum of (squared) hinge losses."""
    stats = hinge_stats(model, d)
    p = 2.0 if model.loss is LossVariant.L2_SQUARED_HINGE else 1.0
    return float(0.5 * model.w_hat @ model.w_hat + (model.penalty_c / p) * stats.sum_xi)


def gramian_rank(d: AugmentedDataset) -> int:
    """Rank of the augmented sample Gramian; diagnostic only."""
    return int(np.linalg.matrix_rank(d.features))
