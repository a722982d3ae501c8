"""Versioned JSON model documents.

Field names are part of the CLI contract:

    kind            "calibsvm-model"
    format_version  1
    w_hat           augmented normal vector (last entry is the bias weight B)
    gamma           augmentation constant
    loss            "l1" | "l2"
    penalty_c       training penalty
    calibration     {"a": ..., "b": ...} or null
    threshold       stored decision threshold or null
    scaler          {"mean": [...], "std": [...]} or null

Floats are serialized with repr-round-tripping, so a save/load cycle
reproduces predictions bitwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .calibration import SigmoidCalibration
from .data import DataError
from .svm import LossVariant, SvmModel

FORMAT_VERSION = 1
DOCUMENT_KIND = "calibsvm-model"


@dataclass(frozen=True)
class ModelDocument:
    model: SvmModel
    calibration: Optional[SigmoidCalibration] = None
    threshold: Optional[float] = None
    scaler_mean: Optional[np.ndarray] = None
    scaler_std: Optional[np.ndarray] = None

    def to_dict(self) -> dict:
        scaler = None
        if self.scaler_mean is not None:
            scaler = {"mean": self.scaler_mean.tolist(), "std": self.scaler_std.tolist()}
        cal = None
        if self.calibration is not None:
            cal = {"a": self.calibration.a, "b": self.calibration.b}
        return {
            "kind": DOCUMENT_KIND,
            "format_version": FORMAT_VERSION,
            "w_hat": self.model.w_hat.tolist(),
            "gamma": self.model.gamma,
            "loss": self.model.loss.value,
            "penalty_c": self.model.penalty_c,
            "calibration": cal,
            "threshold": self.threshold,
            "scaler": scaler,
        }


def save_model(doc: ModelDocument, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ModelDocument:
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if raw.get("kind") != DOCUMENT_KIND:
        raise DataError(f"{path} is not a {DOCUMENT_KIND} document")
    if raw.get("format_version") != FORMAT_VERSION:
        raise DataError(
            f"unsupported model format version {raw.get('format_version')}"
        )
    model = SvmModel(
        w_hat=np.array(raw["w_hat"], dtype=np.float64),
        gamma=float(raw["gamma"]),
        loss=LossVariant(raw["loss"]),
        penalty_c=float(raw["penalty_c"]),
    )
    calibration = None
    if raw.get("calibration") is not None:
        calibration = SigmoidCalibration(
            a=float(raw["calibration"]["a"]), b=float(raw["calibration"]["b"])
        )
    scaler_mean = scaler_std = None
    if raw.get("scaler") is not None:
        scaler_mean = np.array(raw["scaler"]["mean"], dtype=np.float64)
        scaler_std = np.array(raw["scaler"]["std"], dtype=np.float64)
    return ModelDocument(
        model=model,
        calibration=calibration,
        threshold=raw.get("threshold"),
        scaler_mean=scaler_mean,
        scaler_std=scaler_std,
    )
