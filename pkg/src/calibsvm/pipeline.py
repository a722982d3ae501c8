"""End-to-end orchestration: load/split, penalty search, training, calibration,
threshold selection and evaluation, with a reproducible report.

All randomness flows from one pipeline seed; each randomized stage derives
its own sub-seed through a fixed rule so adding a stage never disturbs the
draws of earlier ones.
"""

from __future__ import annotations

import json
import math
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__
from .calibration import CalibrationSet, NewtonConfig, SigmoidCalibration, calibrate_score, fit_platt
from .data import (
    DataError,
    Dataset,
    SplitSpec,
    apply_scaling,
    augment,
    load_csv,
    load_svmlight,
    scale_statistics,
    stratified_split,
)
from .metrics import EvaluationReport, evaluate_labels
from .model_io import ModelDocument, save_model
from .model_select import CvResult, GridSpec, ThresholdResult, select_threshold, grid_search_c
from .qp import SolverConfig
from .svm import LossVariant, SvmModel, predict_labels, raw_scores, train

_STAGE_OFFSETS = {"split": 1, "cv": 2, "synth": 3}


def stage_seed(seed: int, stage: str) -> int:
    """Deterministic per-stage sub-seed derived from the pipeline seed."""
    return seed * 1009 + _STAGE_OFFSETS[stage]


@dataclass(frozen=True)
class PipelineConfig:
    """Everything needed to reproduce a run.

    Provide either all three of train/calibration/test paths or a single
    input path plus split fractions, never both.
    """

    train_path: Optional[str] = None
    calibration_path: Optional[str] = None
    test_path: Optional[str] = None
    input_path: Optional[str] = None
    split: Optional[SplitSpec] = None
    data_format: str = "svmlight"
    label_column: object = -1
    has_header: bool = False
    loss: LossVariant = LossVariant.L1_HINGE
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverConfig = field(default_factory=SolverConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    gamma: float = 1.0
    threshold_step: float = 0.01
    calibrate_on_train: bool = False
    scale: bool = False
    seed: int = 0
    output_dir: Optional[str] = None
    report_format: str = "json"

    def __post_init__(self):
        three = (self.train_path, self.calibration_path, self.test_path)
        if self.input_path is not None:
            if any(p is not None for p in three):
                raise DataError("give either three dataset files or one file + split, not both")
            if self.split is None:
                raise DataError("single-file input needs split fractions")
        else:
            if any(p is None for p in three):
                raise DataError("train, calibration and test paths are all required")
        if self.data_format not in ("svmlight", "csv"):
            raise DataError(f"unknown data format {self.data_format!r}")
        if self.report_format not in ("json", "text"):
            raise DataError(f"unknown report format {self.report_format!r}")

    def to_dict(self) -> dict:
        return {
            "train_path": self.train_path,
            "calibration_path": self.calibration_path,
            "test_path": self.test_path,
            "input_path": self.input_path,
            "split": None if self.split is None else {
                "train_fraction": self.split.train_fraction,
                "calibration_fraction": self.split.calibration_fraction,
                "test_fraction": self.split.test_fraction,
                "seed": self.split.seed,
            },
            "data_format": self.data_format,
            "label_column": self.label_column,
            "has_header": self.has_header,
            "loss": self.loss.value,
            "grid": {
                "exponents": list(self.grid.exponents),
                "folds": self.grid.folds,
                "seed": self.grid.seed,
            },
            "solver": {
                "rtol": self.solver.rtol,
                "max_iterations": self.solver.max_iterations,
                "expansion_step": self.solver.expansion_step,
                "proportioning": self.solver.proportioning,
                "norm_estimate_iterations": self.solver.norm_estimate_iterations,
                "norm_estimate_tol": self.solver.norm_estimate_tol,
            },
            "newton": {
                "gradient_tol": self.newton.gradient_tol,
                "max_iterations": self.newton.max_iterations,
                "hessian_regularization": self.newton.hessian_regularization,
                "initial_radius": self.newton.initial_radius,
                "shrink_factor": self.newton.shrink_factor,
                "expand_factor": self.newton.expand_factor,
                "acceptance_ratio": self.newton.acceptance_ratio,
            },
            "gamma": self.gamma,
            "threshold_step": self.threshold_step,
            "calibrate_on_train": self.calibrate_on_train,
            "scale": self.scale,
            "seed": self.seed,
            "report_format": self.report_format,
        }


def _dataset_characteristics(parts: dict[str, Dataset]) -> list[dict]:
    rows = []
    for name, ds in parts.items():
        pos, neg = ds.class_counts()
        rows.append({
            "part": name,
            "active": pos,
            "active_pct": 100.0 * pos / ds.m,
            "inactive": neg,
            "inactive_pct": 100.0 * neg / ds.m,
            "total": ds.m,
        })
    return rows


@dataclass
class PipelineReport:
    dataset_characteristics: list
    best_c: float
    cv_summary: list
    uncalibrated: EvaluationReport
    calibration_a: float
    calibration_b: float
    calibration_converged: bool
    newton_iterations: int
    calibrated: EvaluationReport
    threshold: ThresholdResult
    timing_seconds: dict
    hessian_applications: dict
    solver_converged: bool
    config: dict
    version: str = __version__

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "dataset_characteristics": self.dataset_characteristics,
            "hyperopt": {"best_c": self.best_c, "per_c": self.cv_summary},
            "uncalibrated_model": self.uncalibrated.to_dict(),
            "calibration": {
                "a": self.calibration_a,
                "b": self.calibration_b,
                "converged": self.calibration_converged,
                "newton_iterations": self.newton_iterations,
            },
            "calibrated_model": self.calibrated.to_dict(),
            "threshold": {
                "value": self.threshold.threshold,
                "precision": self.threshold.precision,
                "sensitivity": self.threshold.sensitivity,
                "f1": self.threshold.f1,
                "feasible": self.threshold.feasible,
            },
            "hessian_applications": self.hessian_applications,
            "solver_converged": self.solver_converged,
            "timing": self.timing_seconds,
            "config": self.config,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = []
        lines.append("== dataset characteristics ==")
        lines.append(f"{'part':<14}{'#active':>18}{'#inactive':>18}{'total':>8}")
        for row in self.dataset_characteristics:
            act = f"{row['active']} ({row['active_pct']:.2f}%)"
            inact = f"{row['inactive']} ({row['inactive_pct']:.2f}%)"
            lines.append(f"{row['part']:<14}{act:>18}{inact:>18}{row['total']:>8}")
        lines.append("")
        u = self.uncalibrated
        exponent = math.log2(self.best_c)
        c_label = f"2^{exponent:g}" if exponent == int(exponent) else f"{self.best_c:g}"
        lines.append("== uncalibrated model ==")
        lines.append(f"{'loss':<6}{'C_BE':>8}{'Pre.[%]':>10}{'Sen.[%]':>10}{'F1':>7}{'AUC':>7}")
        lines.append(
            f"{self.config['loss']:<6}{c_label:>8}"
            f"{100 * u.precision:>10.2f}{100 * u.sensitivity:>10.2f}"
            f"{u.f1:>7.2f}{u.auc:>7.2f}"
        )
        lines.append("")
        c = self.calibrated
        lines.append("== calibrated model ==")
        lines.append(
            f"{'Brier':>8}{'Thr.':>7}{'Pre.[%]':>10}{'Sen.[%]':>10}{'F1':>7}{'AUC':>7}"
        )
        lines.append(
            f"{c.brier:>8.4f}{self.threshold.threshold:>7.2f}"
            f"{100 * c.precision:>10.2f}{100 * c.sensitivity:>10.2f}"
            f"{c.f1:>7.2f}{c.auc:>7.2f}"
        )
        if not self.threshold.feasible:
            lines.append("warning: no threshold reached F1 > 0.5; best-F1 threshold reported")
        lines.append("")
        lines.append("== timing ==")
        for phase, seconds in self.timing_seconds.items():
            lines.append(f"{phase:<14}{seconds:>8.2f} s")
        lines.append("")
        lines.append("== configuration ==")
        lines.append(json.dumps(self.config, indent=2, sort_keys=True))
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_text()


def _load_file(path, cfg: PipelineConfig) -> Dataset:
    if cfg.data_format == "csv":
        return load_csv(path, label_column=cfg.label_column, has_header=cfg.has_header)
    return load_svmlight(path)


def _obtain_datasets(cfg: PipelineConfig):
    if cfg.input_path is not None:
        if not os.path.exists(cfg.input_path):
            raise DataError(f"input dataset not found: {cfg.input_path}")
        full = _load_file(cfg.input_path, cfg)
        split = SplitSpec(
            cfg.split.train_fraction,
            cfg.split.calibration_fraction,
            cfg.split.test_fraction,
            seed=stage_seed(cfg.seed, "split"),
        )
        return stratified_split(full, split)
    for role, path in (
        ("training", cfg.train_path),
        ("calibration", cfg.calibration_path),
        ("test", cfg.test_path),
    ):
        if not os.path.exists(path):
            raise DataError(f"{role} dataset not found: {path}")
    return (
        _load_file(cfg.train_path, cfg),
        _load_file(cfg.calibration_path, cfg),
        _load_file(cfg.test_path, cfg),
    )


def run_pipeline(cfg: PipelineConfig) -> PipelineReport:
    """Execute every stage in order and assemble the report.

    Stage errors halt with a stage-tagged message; an infeasible threshold is
    only a warning recorded in the report.
    """
    wall_start = time.monotonic()
    timing: dict[str, float] = {}

    t0 = time.monotonic()
    train_ds, cal_ds, test_ds = _obtain_datasets(cfg)
    if cfg.scale:
        mean, std = scale_statistics(train_ds)
        train_ds = apply_scaling(train_ds, mean, std)
        cal_ds = apply_scaling(cal_ds, mean, std)
        test_ds = apply_scaling(test_ds, mean, std)
    else:
        mean = std = None
    timing["load"] = time.monotonic() - t0

    characteristics = _dataset_characteristics(
        {"training": train_ds, "calibration": cal_ds, "test": test_ds}
    )
    aug_train = augment(train_ds, cfg.gamma)

    t0 = time.monotonic()
    grid = GridSpec(
        exponents=cfg.grid.exponents,
        folds=cfg.grid.folds,
        seed=stage_seed(cfg.seed, "cv"),
    )
    cv = grid_search_c(aug_train, cfg.loss, grid, cfg.solver)
    timing["hyperopt"] = time.monotonic() - t0

    t0 = time.monotonic()
    model = train(aug_train, cfg.loss, cv.best_c, cfg.solver)
    timing["training"] = time.monotonic() - t0

    t0 = time.monotonic()
    cal_source = train_ds if cfg.calibrate_on_train else cal_ds
    cal_set = CalibrationSet(
        scores=raw_scores(model, cal_source.features), labels=cal_source.labels
    )
    calibration = fit_platt(cal_set, cfg.newton)
    timing["calibration"] = time.monotonic() - t0

    t0 = time.monotonic()
    test_scores = raw_scores(model, test_ds.features)
    uncalibrated = evaluate_labels(
        predict_labels(model, test_ds.features), test_ds.labels, test_scores
    )
    probabilities = calibrate_score(calibration, test_scores)
    threshold = select_threshold(probabilities, test_ds.labels, cfg.threshold_step)
    calibrated = evaluate_labels(
        np.where(probabilities > threshold.threshold, 1, -1),
        test_ds.labels,
        probabilities,
        probabilities=probabilities,
        threshold=threshold.threshold,
    )
    timing["evaluation"] = time.monotonic() - t0

    cv_summary = [
        {
            "c": point.c,
            "accumulated_precision_plus_sensitivity": point.accumulated_score,
            "mean_per_fold": point.mean_score,
            "folds": [
                {"precision": fm.precision, "sensitivity": fm.sensitivity, "f1": fm.f1}
                for fm in point.fold_metrics
            ],
        }
        for point in cv.per_c
    ]
    hessian_applications = {
        "training": model.training_diagnostics.hessian_applications,
        "hyperopt": cv.hessian_applications,
        "total": cv.hessian_applications + model.training_diagnostics.hessian_applications,
    }

    report = PipelineReport(
        dataset_characteristics=characteristics,
        best_c=cv.best_c,
        cv_summary=cv_summary,
        uncalibrated=uncalibrated,
        calibration_a=calibration.a,
        calibration_b=calibration.b,
        calibration_converged=calibration.converged,
        newton_iterations=calibration.newton_iterations,
        calibrated=calibrated,
        threshold=threshold,
        timing_seconds=timing,
        hessian_applications=hessian_applications,
        solver_converged=model.training_diagnostics.converged,
        config=cfg.to_dict(),
    )

    if cfg.output_dir is not None:
        t0 = time.monotonic()
        os.makedirs(cfg.output_dir, exist_ok=True)
        doc = ModelDocument(
            model=model,
            calibration=calibration,
            threshold=threshold.threshold,
            scaler_mean=mean,
            scaler_std=std,
        )
        save_model(doc, os.path.join(cfg.output_dir, "model.json"))
        suffix = "json" if cfg.report_format == "json" else "txt"
        timing["persist"] = time.monotonic() - t0
        timing["total"] = time.monotonic() - wall_start
        with open(os.path.join(cfg.output_dir, f"report.{suffix}"), "w", encoding="utf-8") as fh:
            fh.write(report.render(cfg.report_format))
    else:
        timing["total"] = time.monotonic() - wall_start
    return report


def predict_rows(
    doc: ModelDocument, data: Dataset, threshold: Optional[float] = None
) -> list[dict]:
    """Per-sample raw score, probability (when calibrated) and predicted label."""
    if threshold is not None and doc.calibration is None:
        raise DataError("threshold given but the model carries no calibration")
    features = data.features
    if doc.scaler_mean is not None:
        features = (features - doc.scaler_mean) / doc.scaler_std
    if features.shape[1] != doc.model.n_features:
        raise DataError(
            f"expected {doc.model.n_features} features, found {features.shape[1]}"
        )
    scores = raw_scores(doc.model, features)
    rows = []
    if doc.calibration is None:
        labels = np.where(scores >= 0.0, 1, -1)
        for s, lab in zip(scores, labels):
            rows.append({"score": float(s), "label": int(lab)})
        return rows
    probabilities = calibrate_score(doc.calibration, scores)
    thr = threshold if threshold is not None else doc.threshold
    if thr is None:
        thr = 0.5
    labels = np.where(probabilities > thr, 1, -1)
    for s, p, lab in zip(scores, probabilities, labels):
        rows.append({"score": float(s), "probability": float(p), "label": int(lab)})
    return rows
