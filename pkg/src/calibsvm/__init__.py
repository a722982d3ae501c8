"""Deterministic linear-SVM activity classification with probability calibration.

Trains relaxed-offset linear SVMs through a bound-constrained QP solver,
calibrates decision scores into posterior probabilities with a sigmoid fit,
and converts probabilities to labels at a threshold balancing precision and
sensitivity.
"""

__version__ = "0.1.0"

from .calibration import (
    CalibrationSet,
    NewtonConfig,
    SigmoidCalibration,
    calibrate_score,
    cross_entropy,
    fit_platt,
    make_targets,
    safe_one_minus_p,
    safe_sigmoid,
)
from .data import (
    AugmentedDataset,
    DataError,
    Dataset,
    SplitSpec,
    augment,
    generate_synthetic,
    load_csv,
    load_svmlight,
    save_csv,
    save_svmlight,
    stratified_kfold,
    stratified_split,
)
from .metrics import (
    ConfusionCounts,
    EvaluationReport,
    auc,
    brier,
    confusion,
    evaluate_labels,
    precision_sensitivity_f1,
)
from .model_io import ModelDocument, load_model, save_model
from .model_select import (
    CvResult,
    GridSpec,
    ThresholdResult,
    grid_search_c,
    select_threshold,
)
from .pipeline import PipelineConfig, PipelineReport, predict_rows, run_pipeline
from .qp import (
    NumericalError,
    QpProblem,
    QpSolution,
    SolverConfig,
    estimate_spectral_norm,
    mprgp_solve,
    projected_gradient,
)
from .svm import (
    HingeStats,
    LossVariant,
    SvmModel,
    assemble_dual,
    hinge_stats,
    predict_label,
    predict_labels,
    raw_score,
    raw_scores,
    train,
)
