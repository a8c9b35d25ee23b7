"""Spray footprint and dose models: evaluation, inversion, and fitting.

Two empirical models drive everything downstream: spot diameter as a linear
function of sqrt(standoff distance) and sqrt(duration), and deposited mass
as a linear function of duration. Both are fitted by ordinary least squares
from measurement tables and carry their calibrated validity ranges.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import warnings
from dataclasses import dataclass, asdict
from importlib import resources
from pathlib import Path
from typing import NamedTuple

import numpy as np

from tasteprint.errors import (
    CalibrationDomainError,
    DegenerateDesignError,
    InvalidCalibrationError,
)


class ExtrapolationWarning(UserWarning):
    """Model evaluated outside its calibrated input range."""


class SubThresholdWarning(UserWarning):
    """Raw model output fell at or below zero and was clamped."""


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class CalibrationSet:
    """Fitted coefficients with validity ranges and fit diagnostics."""

    beta0: float  # mm
    beta1: float  # mm / sqrt(mm)
    beta2: float  # mm / sqrt(ms)
    alpha0: float  # mg
    alpha1: float  # mg / ms
    distance_range: tuple[float, float] = (20.0, 40.0)
    duration_range: tuple[int, int] = (10, 80)
    pressure_mpa: float = 0.10  # metadata; both models hold one pressure
    resolution_r2: float = 0.0
    amount_r2: float = 0.0
    resolution_replicate_sd: float = 0.0
    amount_replicate_sd: float = 0.0

    def __post_init__(self):
        dmin, dmax = self.distance_range
        tmin, tmax = self.duration_range
        if not (0 < dmin <= dmax):
            raise InvalidCalibrationError("distance_range must be positive and ordered")
        if not (0 < tmin <= tmax):
            raise InvalidCalibrationError("duration_range must be positive and ordered")
        if self.alpha1 <= 0:
            raise InvalidCalibrationError("alpha1 must be positive (mass grows with duration)")
        for name in ("resolution_r2", "amount_r2"):
            r2 = getattr(self, name)
            if not 0.0 <= r2 <= 1.0:
                raise InvalidCalibrationError(f"{name} must lie in [0, 1]")

    def identifier(self) -> str:
        """Stable short id over the coefficient values."""
        payload = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()[:12]

    def to_json(self) -> dict:
        doc = asdict(self)
        doc["distance_range"] = list(self.distance_range)
        doc["duration_range"] = list(self.duration_range)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "CalibrationSet":
        return cls(
            beta0=float(doc["beta0"]),
            beta1=float(doc["beta1"]),
            beta2=float(doc["beta2"]),
            alpha0=float(doc["alpha0"]),
            alpha1=float(doc["alpha1"]),
            distance_range=tuple(float(v) for v in doc["distance_range"]),
            duration_range=tuple(int(v) for v in doc["duration_range"]),
            pressure_mpa=float(doc.get("pressure_mpa", 0.10)),
            resolution_r2=float(doc.get("resolution_r2", 0.0)),
            amount_r2=float(doc.get("amount_r2", 0.0)),
            resolution_replicate_sd=float(doc.get("resolution_replicate_sd", 0.0)),
            amount_replicate_sd=float(doc.get("amount_replicate_sd", 0.0)),
        )


def default_calibration() -> CalibrationSet:
    """Calibration shipped with the toolchain (filter-paper measurements at 0.10 MPa)."""
    data = resources.files("tasteprint").joinpath("data/default_calibration.json")
    return CalibrationSet.from_json(json.loads(data.read_text()))


def load_calibration(path: str | Path) -> CalibrationSet:
    return CalibrationSet.from_json(json.loads(Path(path).read_text()))


def save_calibration(cal: CalibrationSet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cal.to_json(), indent=2, sort_keys=True) + "\n")


def predict_quiet(fn, *args):
    """Evaluate a model function, capturing its warnings as strings.

    Callers that surface warnings through their own diagnostics channel
    (planner annotations, simulator reports, API responses) use this
    instead of letting the warnings escape to the global filter.
    """
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        value = fn(*args)
    return value, tuple(str(w.message) for w in caught)


def predict_diameter(cal: CalibrationSet, distance_mm: float, duration_ms: float) -> float:
    """Footprint diameter in mm for one spray at the given standoff and duration."""
    if distance_mm <= 0 or duration_ms <= 0:
        raise CalibrationDomainError("distance and duration must be positive")
    _warn_if_outside("distance", distance_mm, cal.distance_range)
    _warn_if_outside("duration", duration_ms, cal.duration_range)
    value = cal.beta0 + cal.beta1 * math.sqrt(distance_mm) + cal.beta2 * math.sqrt(duration_ms)
    if value <= 0:
        warnings.warn(
            f"predicted diameter {value:.3f} mm is non-positive; clamped to 0",
            SubThresholdWarning,
            stacklevel=2,
        )
        return 0.0
    return value


def predict_mass(cal: CalibrationSet, duration_ms: float) -> float:
    """Deposited mass in mg for one spray of the given duration."""
    if duration_ms <= 0:
        raise CalibrationDomainError("duration must be positive")
    raw = cal.alpha0 + cal.alpha1 * duration_ms
    if raw < 0:
        warnings.warn(
            f"predicted mass {raw:.3f} mg is negative; clamped to 0",
            SubThresholdWarning,
            stacklevel=2,
        )
        return 0.0
    return raw


class DurationResult(NamedTuple):
    duration_ms: int
    clamped: bool


def duration_for_mass(cal: CalibrationSet, target_mg: float) -> DurationResult:
    """Invert the dose model, quantized to whole ms and clamped to the calibrated range."""
    if target_mg <= 0:
        raise CalibrationDomainError("target mass must be positive")
    if cal.alpha1 <= 0:
        raise InvalidCalibrationError("alpha1 must be positive to invert the dose model")
    raw = (target_mg - cal.alpha0) / cal.alpha1
    rounded = max(1, _round_half_up(raw))
    lo, hi = cal.duration_range
    clamped = min(max(rounded, lo), hi)
    return DurationResult(duration_ms=clamped, clamped=clamped != rounded)


def scale_duration_for_layer_height(
    duration_ms: float, layer_height: float, reference_height: float
) -> int:
    """Scale a spray duration proportionally with layer height (1 ms floor)."""
    if duration_ms <= 0 or layer_height <= 0 or reference_height <= 0:
        raise CalibrationDomainError("duration and heights must be positive")
    return max(1, _round_half_up(duration_ms * layer_height / reference_height))


@dataclass(frozen=True)
class CalibrationSample:
    distance_mm: float
    duration_ms: float
    diameter_mm: float | None = None
    mass_mg: float | None = None
    replicate: int = 0

    def __post_init__(self):
        if self.diameter_mm is None and self.mass_mg is None:
            raise ValueError("sample carries neither a diameter nor a mass measurement")
        if self.diameter_mm is not None and self.diameter_mm < 0:
            raise ValueError("diameter must be non-negative")
        if self.mass_mg is not None and self.mass_mg < 0:
            raise ValueError("mass must be non-negative")


@dataclass(frozen=True)
class FitReport:
    model: str  # "resolution" or "amount"
    coefficients: tuple[float, ...]
    r2: float
    residuals: tuple[float, ...]
    mean_replicate_sd: float
    sample_count: int

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "coefficients": list(self.coefficients),
            "r2": self.r2,
            "residuals": list(self.residuals),
            "mean_replicate_sd": self.mean_replicate_sd,
            "sample_count": self.sample_count,
        }


def fit_resolution_model(samples: list[CalibrationSample]) -> FitReport:
    """OLS fit of diameter on [1, sqrt(distance), sqrt(duration)]."""
    usable = [s for s in samples if s.diameter_mm is not None]
    if len(usable) < 4:
        raise DegenerateDesignError("need at least 4 samples with diameter measurements")
    if len({s.distance_mm for s in usable}) < 2 or len({s.duration_ms for s in usable}) < 2:
        raise DegenerateDesignError("need at least 2 distinct distances and durations")
    x = np.array([[1.0, math.sqrt(s.distance_mm), math.sqrt(s.duration_ms)] for s in usable])
    y = np.array([s.diameter_mm for s in usable])
    coeffs, residuals, r2 = _ols(x, y)
    sd = _mean_replicate_sd(usable, key=lambda s: (s.distance_mm, s.duration_ms),
                            value=lambda s: s.diameter_mm)
    return FitReport(
        model="resolution",
        coefficients=tuple(coeffs),
        r2=r2,
        residuals=tuple(residuals),
        mean_replicate_sd=sd,
        sample_count=len(usable),
    )


def fit_amount_model(samples: list[CalibrationSample]) -> FitReport:
    """OLS fit of deposited mass on [1, duration]."""
    usable = [s for s in samples if s.mass_mg is not None]
    if len(usable) < 2 or len({s.duration_ms for s in usable}) < 2:
        raise DegenerateDesignError("need at least 2 distinct durations with mass measurements")
    x = np.array([[1.0, s.duration_ms] for s in usable])
    y = np.array([s.mass_mg for s in usable])
    coeffs, residuals, r2 = _ols(x, y)
    sd = _mean_replicate_sd(usable, key=lambda s: s.duration_ms, value=lambda s: s.mass_mg)
    return FitReport(
        model="amount",
        coefficients=tuple(coeffs),
        r2=r2,
        residuals=tuple(residuals),
        mean_replicate_sd=sd,
        sample_count=len(usable),
    )


def _ols(x: np.ndarray, y: np.ndarray):
    if np.linalg.matrix_rank(x) < x.shape[1]:
        raise DegenerateDesignError("design matrix is rank-deficient")
    coeffs, *_ = np.linalg.lstsq(x, y, rcond=None)
    predicted = x @ coeffs
    residuals = y - predicted
    ss_res = float(np.sum(residuals**2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return [float(c) for c in coeffs], residuals.tolist(), r2


def _mean_replicate_sd(samples, key, value) -> float:
    groups: dict = {}
    for s in samples:
        groups.setdefault(key(s), []).append(value(s))
    sds = [float(np.std(vals, ddof=1)) for vals in groups.values() if len(vals) >= 2]
    return float(np.mean(sds)) if sds else 0.0


CSV_HEADER = ["distance_mm", "duration_ms", "diameter_mm", "mass_mg", "replicate"]


def read_samples_csv(path: str | Path) -> list[CalibrationSample]:
    """Read a measurement table; empty cells mark absent measurements."""
    samples = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_HEADER) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"sample CSV missing columns: {sorted(missing)}")
        for row in reader:
            samples.append(
                CalibrationSample(
                    distance_mm=float(row["distance_mm"]),
                    duration_ms=float(row["duration_ms"]),
                    diameter_mm=float(row["diameter_mm"]) if row["diameter_mm"] else None,
                    mass_mg=float(row["mass_mg"]) if row["mass_mg"] else None,
                    replicate=int(row["replicate"] or 0),
                )
            )
    return samples


def write_samples_csv(samples: list[CalibrationSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for s in samples:
            writer.writerow(
                [
                    s.distance_mm,
                    s.duration_ms,
                    "" if s.diameter_mm is None else s.diameter_mm,
                    "" if s.mass_mg is None else s.mass_mg,
                    s.replicate,
                ]
            )


def _warn_if_outside(name: str, value: float, bounds: tuple[float, float]) -> None:
    lo, hi = bounds
    if not lo <= value <= hi:
        warnings.warn(
            f"{name} {value:g} outside calibrated range [{lo:g}, {hi:g}]; extrapolating",
            ExtrapolationWarning,
            stacklevel=3,
        )
