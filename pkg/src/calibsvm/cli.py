"""Command-line interface.

Subcommands: synth, split, train, calibrate, predict, evaluate, pipeline.
Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys

import numpy as np

from . import __version__
from .calibration import CalibrationSet, NewtonConfig, fit_platt
from .data import (
    DataError,
    SplitSpec,
    augment,
    generate_synthetic,
    load_csv,
    load_svmlight,
    save_csv,
    save_svmlight,
    stratified_split,
)
from .metrics import evaluate_labels
from .model_io import ModelDocument, load_model, save_model
from .model_select import GridSpec, grid_search_c, select_threshold
from .pipeline import PipelineConfig, predict_rows, run_pipeline, stage_seed
from .qp import NumericalError, SolverConfig
from .svm import LossVariant, predict_labels, raw_scores, train

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let exponent ranges like "-7..7" parse as values, not option strings
        self._negative_number_matcher = re.compile(r"^-\d+(\.\.-?\d+)?$")

    # argparse exits with 2 on usage errors by default; the CLI contract is 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_exponents(text: str) -> tuple:
    match = re.fullmatch(r"\s*(-?\d+)\s*\.\.\s*(-?\d+)\s*", text)
    if not match:
        raise argparse.ArgumentTypeError(
            f"expected an exponent range like -7..7, got {text!r}"
        )
    lo, hi = int(match.group(1)), int(match.group(2))
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty exponent range {text!r}")
    return tuple(range(lo, hi + 1))


def _label_column(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _add_data_flags(p):
    p.add_argument("--format", choices=("svmlight", "csv"), default="svmlight",
                   help="input file format")
    p.add_argument("--label-column", type=_label_column, default=-1,
                   help="CSV label column name or index (default: last)")
    p.add_argument("--has-header", action="store_true",
                   help="first CSV row is a header")


def _add_solver_flags(p):
    p.add_argument("--rtol", type=float, default=1e-1,
                   help="relative projected-gradient stopping tolerance")
    p.add_argument("--max-it", type=int, default=10000,
                   help="QP iteration cap")
    p.add_argument("--gamma", type=float, default=1.0,
                   help="augmentation constant")


def _load_any(path, args):
    if args.format == "csv":
        return load_csv(path, label_column=args.label_column, has_header=args.has_header)
    return load_svmlight(path)


def _save_any(ds, path, args):
    if args.format == "csv":
        save_csv(ds, path)
    else:
        save_svmlight(ds, path)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="calibsvm", description=__doc__)
    parser.add_argument("--version", action="version", version=f"calibsvm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[], help="generate a synthetic dataset")
    p.add_argument("--m", type=int, default=1000, help="sample count")
    p.add_argument("--n", type=int, default=10, help="feature count")
    p.add_argument("--active-fraction", type=float, default=0.5)
    p.add_argument("--separation", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output file")
    _add_data_flags(p)

    p = sub.add_parser("split", help="stratified train/calibration/test split")
    p.add_argument("--input", required=True)
    p.add_argument("--fractions", default="0.64,0.20,0.16",
                   help="train,calibration,test fractions")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    _add_data_flags(p)

    p = sub.add_parser("train", help="train a model (grid-searched C unless --c given)")
    p.add_argument("--train", required=True, dest="train_file")
    p.add_argument("--loss", choices=("l1", "l2"), default="l1")
    p.add_argument("--c", type=float, default=None, help="fixed penalty; skips HyperOpt")
    p.add_argument("--c-exponents", type=_parse_exponents, default=tuple(range(-7, 8)),
                   help="penalty grid 2^lo..2^hi, e.g. -7..7")
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="model document path")
    _add_solver_flags(p)
    _add_data_flags(p)

    p = sub.add_parser("calibrate", help="fit sigmoid calibration onto a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="calibration dataset")
    p.add_argument("--out", required=True, help="updated model document path")
    _add_data_flags(p)

    p = sub.add_parser("predict", help="score samples with a model document")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=None)
    _add_data_flags(p)

    p = sub.add_parser("evaluate", help="evaluate a model document on labelled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--report", choices=("json", "text"), default="json")
    _add_data_flags(p)

    p = sub.add_parser("pipeline", help="full train/calibrate/threshold/evaluate run")
    p.add_argument("--train", dest="train_file")
    p.add_argument("--calibration", dest="calibration_file")
    p.add_argument("--test", dest="test_file")
    p.add_argument("--input", help="single dataset to be split")
    p.add_argument("--fractions", default="0.64,0.20,0.16")
    p.add_argument("--loss", choices=("l1", "l2"), default="l1")
    p.add_argument("--c-exponents", type=_parse_exponents, default=tuple(range(-7, 8)))
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--threshold-step", type=float, default=0.01)
    p.add_argument("--calibrate-on-train", action="store_true")
    p.add_argument("--scale", action="store_true",
                   help="standardize features using training statistics")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", choices=("json", "text"), default="json")
    p.add_argument("--out", default=None, help="output directory for model + report")
    _add_solver_flags(p)
    _add_data_flags(p)

    return parser


def _parse_fractions(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise DataError(f"expected three fractions, got {text!r}")
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise DataError(f"non-numeric fraction in {text!r}") from None


def _cmd_synth(args) -> int:
    ds = generate_synthetic(args.m, args.n, args.active_fraction, args.separation, args.seed)
    _save_any(ds, args.out, args)
    pos, neg = ds.class_counts()
    print(f"wrote {args.out}: {ds.m} samples, {ds.n} features, {pos} active / {neg} inactive")
    return EXIT_OK


def _cmd_split(args) -> int:
    fr = _parse_fractions(args.fractions)
    ds = _load_any(args.input, args)
    parts = stratified_split(ds, SplitSpec(*fr, seed=args.seed))
    os.makedirs(args.out_dir, exist_ok=True)
    ext = "csv" if args.format == "csv" else "svml"
    base = os.path.splitext(os.path.basename(args.input))[0]
    for part, tag in zip(parts, ("train", "calibration", "test")):
        path = os.path.join(args.out_dir, f"{base}.{tag}.{ext}")
        _save_any(part, path, args)
        pos, neg = part.class_counts()
        print(f"wrote {path}: {part.m} samples ({pos} active / {neg} inactive)")
    return EXIT_OK


def _cmd_train(args) -> int:
    ds = _load_any(args.train_file, args)
    aug = augment(ds, args.gamma)
    loss = LossVariant(args.loss)
    solver = SolverConfig(rtol=args.rtol, max_iterations=args.max_it)
    if args.c is not None:
        best_c = args.c
    else:
        grid = GridSpec(exponents=args.c_exponents, folds=args.folds,
                        seed=stage_seed(args.seed, "cv"))
        cv = grid_search_c(aug, loss, grid, solver)
        best_c = cv.best_c
        print(f"HyperOpt selected C = {best_c:g}")
    model = train(aug, loss, best_c, solver)
    if not model.training_diagnostics.converged:
        print("warning: QP did not reach the requested tolerance; "
              "model carries a non-convergence flag", file=sys.stderr)
    save_model(ModelDocument(model=model), args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    doc = load_model(args.model)
    ds = _load_any(args.data, args)
    features = ds.features
    if doc.scaler_mean is not None:
        features = (features - doc.scaler_mean) / doc.scaler_std
    cal_set = CalibrationSet(scores=raw_scores(doc.model, features), labels=ds.labels)
    calibration = fit_platt(cal_set)
    updated = ModelDocument(
        model=doc.model,
        calibration=calibration,
        threshold=doc.threshold,
        scaler_mean=doc.scaler_mean,
        scaler_std=doc.scaler_std,
    )
    save_model(updated, args.out)
    print(f"wrote {args.out}: A = {calibration.a:.6g}, B = {calibration.b:.6g}, "
          f"{calibration.newton_iterations} Newton iterations")
    return EXIT_OK


def _cmd_predict(args) -> int:
    doc = load_model(args.model)
    ds = _load_any(args.data, args)
    rows = predict_rows(doc, ds, threshold=args.threshold)
    if "probability" in rows[0]:
        print("# score probability label")
        for row in rows:
            print(f"{row['score']!r} {row['probability']!r} {row['label']:+d}")
    else:
        print("# score label")
        for row in rows:
            print(f"{row['score']!r} {row['label']:+d}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    doc = load_model(args.model)
    ds = _load_any(args.data, args)
    rows = predict_rows(doc, ds, threshold=args.threshold)
    predicted = np.array([row["label"] for row in rows])
    scores = np.array([row["score"] for row in rows])
    probabilities = None
    threshold = None
    if doc.calibration is not None:
        probabilities = np.array([row["probability"] for row in rows])
        threshold = args.threshold if args.threshold is not None else doc.threshold
    report = evaluate_labels(predicted, ds.labels, scores,
                             probabilities=probabilities, threshold=threshold)
    if args.report == "json":
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    else:
        print(f"precision   {report.precision:.4f}")
        print(f"sensitivity {report.sensitivity:.4f}")
        print(f"f1          {report.f1:.4f}")
        print(f"auc         {report.auc:.4f}")
        if report.brier is not None:
            print(f"brier       {report.brier:.4f}")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    split = None
    if args.input is not None:
        split = SplitSpec(*_parse_fractions(args.fractions), seed=0)
    cfg = PipelineConfig(
        train_path=args.train_file,
        calibration_path=args.calibration_file,
        test_path=args.test_file,
        input_path=args.input,
        split=split,
        data_format=args.format,
        label_column=args.label_column,
        has_header=args.has_header,
        loss=LossVariant(args.loss),
        grid=GridSpec(exponents=args.c_exponents, folds=args.folds),
        solver=SolverConfig(rtol=args.rtol, max_iterations=args.max_it),
        newton=NewtonConfig(),
        gamma=args.gamma,
        threshold_step=args.threshold_step,
        calibrate_on_train=args.calibrate_on_train,
        scale=args.scale,
        seed=args.seed,
        output_dir=args.out,
        report_format=args.report,
    )
    report = run_pipeline(cfg)
    print(report.render(args.report), end="")
    if not report.threshold.feasible:
        print("warning: no threshold reached F1 > 0.5", file=sys.stderr)
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "split": _cmd_split,
    "train": _cmd_train,
    "calibrate": _cmd_calibrate,
    "predict": _cmd_predict,
    "evaluate": _cmd_evaluate,
    "pipeline": _cmd_pipeline,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except FileNotFoundError as exc:
        print(f"calibsvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DataError as exc:
        print(f"calibsvm: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"calibsvm: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
