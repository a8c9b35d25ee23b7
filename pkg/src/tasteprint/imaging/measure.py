"""Spray spot segmentation and equivalent-diameter measurement.

Pipeline: rectify the photo around the ROI at a fixed 10 px/mm, run Otsu
on the red channel, label 8-connected foreground components, keep the
largest, and report its area as an equivalent circular diameter.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from tasteprint.errors import EmptySpotError
from tasteprint.imaging.homography import MarkerCorrespondence, estimate_homography, rectify
from tasteprint.imaging.image import RasterImage

RECTIFY_RESOLUTION = 10.0  # px/mm
DEFAULT_ROI_SIZE = 24.0  # mm

_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


class NoContrastWarning(UserWarning):
    pass


@dataclass(frozen=True)
class SpotMeasurement:
    equivalent_diameter_mm: float
    area_mm2: float
    centroid_mm: tuple[float, float]
    threshold_used: int


def otsu_threshold(plane: np.ndarray) -> int:
    """Threshold t in [0, 255] maximizing between-class variance.

    The below class is {value <= t}. Ties break toward the lower threshold.
    A constant image returns its single value with a no-contrast warning.
    """
    plane = np.asarray(plane)
    if plane.size == 0:
        raise ValueError("empty image plane")
    hist = np.bincount(plane.ravel().astype(np.uint8), minlength=256).astype(float)
    total = hist.sum()
    values = np.arange(256, dtype=float)

    w0 = np.cumsum(hist)
    w1 = total - w0
    sum0 = np.cumsum(hist * values)
    mean_total = sum0[-1] / total
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = sum0 / w0
        mu1 = (sum0[-1] - sum0) / w1
        between = w0 * w1 * (mu0 - mu1) ** 2
    between = np.nan_to_num(between, nan=0.0)

    if between.max() == 0.0:
        value = int(plane.ravel()[0])
        warnings.warn(
            f"image has no contrast; returning its constant value {value}",
            NoContrastWarning,
            stacklevel=2,
        )
        return value
    return int(np.argmax(between))  # argmax takes the first (lowest) maximizer


def largest_component(mask: np.ndarray) -> np.ndarray:
    """Boolean mask of the largest 8-connected foreground component."""
    labels, count = ndimage.label(mask, structure=_EIGHT_CONNECTED)
    if count == 0:
        raise EmptySpotError("no foreground pixels in region")
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=range(1, count + 1))
    return labels == (1 + int(np.argmax(sizes)))


def measure_spot(
    image: RasterImage,
    correspondences: list[MarkerCorrespondence],
    roi_center: tuple[float, float],
    roi_size: float = DEFAULT_ROI_SIZE,
    resolution: float = RECTIFY_RESOLUTION,
    foreground: str = "dark",
) -> SpotMeasurement:
    """Measure the spray spot inside a square ROI centered at ``roi_center`` (mm).

    ``foreground`` selects which Otsu class is the dye: "dark" (default,
    below threshold) or "bright".
    """
    if roi_size <= 0:
        raise ValueError("roi_size must be positive")
    if foreground not in ("dark", "bright"):
        raise ValueError("foreground must be 'dark' or 'bright'")
    cx, cy = roi_center
    half = roi_size / 2.0
    region = (cx - half, cy - half, cx + half, cy + half)
    h = estimate_homography(correspondences)
    rectified = rectify(image, h, region, resolution)

    red = rectified.red
    threshold = otsu_threshold(red)
    mask = red <= threshold if foreground == "dark" else red > threshold
    if mask.all():
        # contrast-free region: the "foreground" class swallowed everything
        raise EmptySpotError("region has no background; no spot to measure")
    spot = largest_component(mask)

    pixel_count = int(spot.sum())
    area = pixel_count / (resolution * resolution)
    rows, cols = np.nonzero(spot)
    centroid = (
        region[0] + (cols.mean() + 0.5) / resolution,
        region[1] + (rows.mean() + 0.5) / resolution,
    )
    return SpotMeasurement(
        equivalent_diameter_mm=2.0 * math.sqrt(area / math.pi),
        area_mm2=area,
        centroid_mm=centroid,
        threshold_used=threshold,
    )
