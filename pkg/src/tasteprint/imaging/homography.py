"""Planar homography estimation (normalized DLT) and metric rectification.

The homography maps pixel coordinates to millimeter plane coordinates.
Pixel coordinates are continuous: pixel (row i, column j) covers the unit
square [j, j+1) x [i, i+1), so its center sits at (j + 0.5, i + 0.5).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tasteprint.errors import DegenerateCorrespondenceError, SingularMatrixError
from tasteprint.imaging.image import RasterImage

# Nullspace separation below this ratio means the DLT system is ambiguous.
_DEGENERACY_RATIO = 1e-9


@dataclass(frozen=True)
class MarkerCorrespondence:
    """One fiducial corner: where it sits in the photo and on the plane."""

    pixel: tuple[float, float]  # (u, v) px
    world: tuple[float, float]  # (x, y) mm


def _normalization(points: np.ndarray) -> np.ndarray:
    """Similarity transform moving the centroid to 0 with mean distance sqrt(2)."""
    centroid = points.mean(axis=0)
    distances = np.linalg.norm(points - centroid, axis=1)
    mean_dist = distances.mean()
    scale = np.sqrt(2.0) / mean_dist if mean_dist > 0 else 1.0
    return np.array(
        [
            [scale, 0.0, -scale * centroid[0]],
            [0.0, scale, -scale * centroid[1]],
            [0.0, 0.0, 1.0],
        ]
    )


def estimate_homography(correspondences: list[MarkerCorrespondence]) -> np.ndarray:
    """3x3 matrix H with H[2,2] = 1 mapping pixel -> mm, by normalized DLT."""
    if len(correspondences) < 4:
        raise DegenerateCorrespondenceError("need at least 4 correspondences")
    src = np.array([c.pixel for c in correspondences], dtype=float)
    dst = np.array([c.world for c in correspondences], dtype=float)

    t_src = _normalization(src)
    t_dst = _normalization(dst)
    src_h = np.column_stack([src, np.ones(len(src))]) @ t_src.T
    dst_h = np.column_stack([dst, np.ones(len(dst))]) @ t_dst.T

    rows = []
    for (x, y, w), (u, v, _) in zip(src_h, dst_h):
        rows.append([0, 0, 0, -w * x, -w * y, -w * w, v * x, v * y, v * w])
        rows.append([w * x, w * y, w * w, 0, 0, 0, -u * x, -u * y, -u * w])
    a = np.array(rows)

    _, singular, vt = np.linalg.svd(a)
    # The nullspace must be one-dimensional for a unique solution. The
    # domain is 9-dimensional, so rank must be 8: the 8th singular value
    # vanishing marks a degenerate configuration. (With exactly 4 points
    # the SVD reports only 8 values; the 9th direction is implicitly null.)
    if singular[0] == 0 or singular[7] / singular[0] < _DEGENERACY_RATIO:
        raise DegenerateCorrespondenceError(
            "correspondences do not determine a unique homography"
        )
    h_norm = vt[-1].reshape(3, 3)
    h = np.linalg.inv(t_dst) @ h_norm @ t_src
    if abs(h[2, 2]) < 1e-15:
        raise DegenerateCorrespondenceError("homography has vanishing scale term")
    return h / h[2, 2]


def apply_homography(h: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Map (n, 2) points through the projective transform."""
    pts = np.asarray(points, dtype=float)
    ones = np.ones((pts.shape[0], 1))
    mapped = np.column_stack([pts, ones]) @ h.T
    w = mapped[:, 2:3]
    if np.any(np.abs(w) < 1e-15):
        raise SingularMatrixError("point maps to infinity under homography")
    return mapped[:, :2] / w


def rectify(
    image: RasterImage,
    h: np.ndarray,
    out_region: tuple[float, float, float, float],
    resolution: float,
) -> RasterImage:
    """Resample ``image`` onto a metric grid over ``out_region`` (mm).

    ``out_region`` is (x_min, y_min, x_max, y_max); output pixel (i, j)
    corresponds to the mm point at its center. Each output center is mapped
    back through H^-1 and sampled bilinearly; samples outside the source
    extent come out black.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    x0, y0, x1, y1 = out_region
    if x1 <= x0 or y1 <= y0:
        raise ValueError("out_region must be non-empty")
    try:
        h_inv = np.linalg.inv(h)
    except np.linalg.LinAlgError:
        raise SingularMatrixError("homography is not invertible") from None

    width = max(1, int(round((x1 - x0) * resolution)))
    height = max(1, int(round((y1 - y0) * resolution)))
    jj, ii = np.meshgrid(np.arange(width), np.arange(height))
    mm = np.column_stack(
        [
            x0 + (jj.ravel() + 0.5) / resolution,
            y0 + (ii.ravel() + 0.5) / resolution,
        ]
    )
    src = apply_homography(h_inv, mm)
    out = _bilinear_sample(image.pixels, src).reshape(height, width, 3)
    return RasterImage(out)


def _bilinear_sample(pixels: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Sample continuous pixel coordinates; outside the image -> black."""
    h, w = pixels.shape[:2]
    x = points[:, 0]
    y = points[:, 1]
    valid = (x >= 0) & (x <= w) & (y >= 0) & (y <= h)

    # Shift to center-based coordinates, clamp so border samples reuse the
    # edge pixel instead of fading to black inside the image footprint.
    u = np.clip(x - 0.5, 0.0, w - 1.0)
    v = np.clip(y - 0.5, 0.0, h - 1.0)
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    u1 = np.minimum(u0 + 1, w - 1)
    v1 = np.minimum(v0 + 1, h - 1)
    fu = (u - u0)[:, None]
    fv = (v - v0)[:, None]

    p00 = pixels[v0, u0].astype(float)
    p01 = pixels[v0, u1].astype(float)
    p10 = pixels[v1, u0].astype(float)
    p11 = pixels[v1, u1].astype(float)
    top = p00 * (1 - fu) + p01 * fu
    bottom = p10 * (1 - fu) + p11 * fu
    result = top * (1 - fv) + bottom * fv
    result[~valid] = 0.0
    return np.clip(np.rint(result), 0, 255).astype(np.uint8)
