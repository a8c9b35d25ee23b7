"""Image-based spray footprint measurement."""

from tasteprint.imaging.image import RasterImage, read_pgm, read_ppm, write_pgm, write_ppm
from tasteprint.imaging.homography import MarkerCorrespondence, estimate_homography, rectify
from tasteprint.imaging.measure import SpotMeasurement, measure_spot, otsu_threshold

__all__ = [
    "RasterImage",
    "read_ppm",
    "write_ppm",
    "read_pgm",
    "write_pgm",
    "MarkerCorrespondence",
    "estimate_homography",
    "rectify",
    "SpotMeasurement",
    "measure_spot",
    "otsu_threshold",
]
