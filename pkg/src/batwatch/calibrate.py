"""Reconstruction-error calibration and anomaly flagging.

The threshold is always computed from validation errors as
mean + k * std (sample std, n-1).  Published reference values such as
0.432 or 0.0007 can be injected as explicit overrides but are never
hardcoded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import CalibrationError, ConfigError

HISTOGRAM_BINS = 100


@dataclass
class ErrorCalibration:
    """Validation error statistics and the derived threshold."""

    model_id: str
    mses: list
    mean: float
    std: float
    k: float
    threshold: float
    override: bool = False


@dataclass
class AnomalyRecord:
    """A flagged window with its provenance and error margin."""

    vehicle_id: str
    start_ms: int
    index: int
    mse: float
    threshold: float

    @property
    def margin(self) -> float:
        return self.mse - self.threshold

    def as_dict(self) -> dict:
        return {
            "vehicle_id": self.vehicle_id,
            "start_ms": self.start_ms,
            "index": self.index,
            "mse": self.mse,
            "threshold": self.threshold,
            "margin": self.margin,
        }


def error_distribution(model, windows) -> list:
    """Per-window reconstruction MSE, in input order."""
    return [
        model.reconstruct(np.asarray(getattr(w, "values", w), dtype=np.float64))[1]
        for w in windows
    ]


def fit_gaussian(mses):
    """Sample mean and standard deviation (n-1 denominator)."""
    mses = np.asarray(mses, dtype=np.float64)
    if mses.size < 2:
        raise CalibrationError(f"need at least 2 errors to fit, got {mses.size}")
    return float(mses.mean()), float(mses.std(ddof=1))


def select_threshold(mean: float, std: float, k: float = 3.0) -> float:
    """Threshold at k standard deviations above the mean."""
    if k < 0:
        raise ConfigError(f"threshold multiplier must be non-negative, got {k}")
    if std < 0:
        raise CalibrationError("standard deviation cannot be negative")
    return mean + k * std


def calibrate(model_id: str, mses, k: float = 3.0, threshold_override: float | None = None) -> ErrorCalibration:
    """Fit the Gaussian and derive the threshold (or adopt an override)."""
    mean, std = fit_gaussian(mses)
    if threshold_override is not None:
        threshold = float(threshold_override)
    else:
        threshold = select_threshold(mean, std, k)
    return ErrorCalibration(
        model_id=model_id,
        mses=[float(m) for m in mses],
        mean=mean,
        std=std,
        k=k,
        threshold=threshold,
        override=threshold_override is not None,
    )


def detect(model, calibration: ErrorCalibration, windows, model_id: str | None = None):
    """Flag every window whose MSE strictly exceeds the threshold.

    Returns (records, summary); summary carries count, total and flagged
    fraction.  model_id defaults to the model's own fingerprint when the
    model object exposes one through the caller.
    """
    if model_id is not None and model_id != calibration.model_id:
        raise CalibrationError(
            f"calibration was fitted for model {calibration.model_id}, got {model_id}"
        )
    mses = error_distribution(model, windows)
    records = []
    for w, err in zip(windows, mses):
        if err > calibration.threshold:
            records.append(
                AnomalyRecord(
                    vehicle_id=getattr(w, "vehicle_id", ""),
                    start_ms=int(getattr(w, "start_ms", 0)),
                    index=int(getattr(w, "index", 0)),
                    mse=float(err),
                    threshold=calibration.threshold,
                )
            )
    total = len(mses)
    summary = {
        "count": len(records),
        "total": total,
        "fraction": len(records) / total if total else 0.0,
    }
    return records, summary


def threshold_sweep(mses, ks):
    """Flagged fraction per threshold multiplier; one row per k."""
    mses = np.asarray(mses, dtype=np.float64)
    if mses.size == 0 or len(ks) == 0:
        raise CalibrationError("sweep needs errors and at least one k")
    mean, std = fit_gaussian(mses)
    rows = []
    for k in ks:
        threshold = select_threshold(mean, std, k)
        rows.append(
            {
                "k": float(k),
                "threshold": threshold,
                "fraction": float(np.mean(mses > threshold)),
            }
        )
    return rows


def calibration_to_json(cal: ErrorCalibration) -> str:
    """Serialize with a fixed 100-bin histogram over [0, mean + 6 std]."""
    upper = max(cal.mean + 6.0 * cal.std, 1e-12)
    counts, _ = np.histogram(np.asarray(cal.mses), bins=HISTOGRAM_BINS, range=(0.0, upper))
    doc = {
        "model_id": cal.model_id,
        "k": cal.k,
        "mean": cal.mean,
        "std": cal.std,
        "threshold": cal.threshold,
        "override": cal.override,
        "histogram": {
            "bin_count": HISTOGRAM_BINS,
            "lower": 0.0,
            "upper": upper,
            "counts": [int(c) for c in counts],
        },
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def calibration_from_json(text: str) -> ErrorCalibration:
    doc = json.loads(text)
    return ErrorCalibration(
        model_id=doc["model_id"],
        mses=[],
        mean=doc["mean"],
        std=doc["std"],
        k=doc["k"],
        threshold=doc["threshold"],
        override=doc.get("override", False),
    )
