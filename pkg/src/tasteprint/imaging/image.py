"""8-bit RGB raster images with binary PPM (P6) and PGM (P5) I/O."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tasteprint.errors import InputError


@dataclass(frozen=True)
class RasterImage:
    """Immutable 8-bit RGB image; pixels indexed [row, column, channel]."""

    pixels: np.ndarray  # (h, w, 3) uint8

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.ndim != 3 or px.shape[2] != 3 or px.dtype != np.uint8:
            raise ValueError("pixels must be a (h, w, 3) uint8 array")
        object.__setattr__(self, "pixels", px)

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def red(self) -> np.ndarray:
        return self.pixels[:, :, 0]

    @property
    def green(self) -> np.ndarray:
        return self.pixels[:, :, 1]

    @property
    def blue(self) -> np.ndarray:
        return self.pixels[:, :, 2]

    @classmethod
    def from_gray(cls, plane: np.ndarray) -> "RasterImage":
        plane = np.asarray(plane, dtype=np.uint8)
        return cls(np.repeat(plane[:, :, None], 3, axis=2))


def _read_pnm_header(data: bytes, magic: bytes, path: str) -> tuple[int, int, int]:
    """Parse 'magic width height maxval' allowing comments and whitespace."""
    tokens = []
    pos = 0
    while len(tokens) < 4:
        if pos >= len(data):
            raise InputError(f"{path}: truncated PNM header")
        ch = data[pos : pos + 1]
        if ch == b"#":
            pos = data.find(b"\n", pos)
            if pos < 0:
                raise InputError(f"{path}: unterminated comment in header")
            continue
        if ch.isspace():
            pos += 1
            continue
        end = pos
        while end < len(data) and not data[end : end + 1].isspace():
            end += 1
        tokens.append(data[pos:end])
        pos = end
    if tokens[0] != magic:
        raise InputError(f"{path}: expected {magic.decode()} file, got {tokens[0].decode()!r}")
    try:
        width, height, maxval = (int(t) for t in tokens[1:4])
    except ValueError:
        raise InputError(f"{path}: non-numeric PNM header field") from None
    if maxval != 255:
        raise InputError(f"{path}: only 8-bit images supported (maxval {maxval})")
    return width, height, pos + 1


def read_ppm(path: str | Path) -> RasterImage:
    path = Path(path)
    data = path.read_bytes()
    width, height, offset = _read_pnm_header(data, b"P6", str(path))
    need = width * height * 3
    if len(data) - offset < need:
        raise InputError(f"{path}: pixel data truncated")
    px = np.frombuffer(data, dtype=np.uint8, count=need, offset=offset)
    return RasterImage(px.reshape(height, width, 3).copy())


def write_ppm(image: RasterImage, path: str | Path) -> None:
    header = f"P6\n{image.width} {image.height}\n255\n".encode()
    Path(path).write_bytes(header + image.pixels.tobytes())


def read_pgm(path: str | Path) -> np.ndarray:
    path = Path(path)
    data = path.read_bytes()
    width, height, offset = _read_pnm_header(data, b"P5", str(path))
    need = width * height
    if len(data) - offset < need:
        raise InputError(f"{path}: pixel data truncated")
    px = np.frombuffer(data, dtype=np.uint8, count=need, offset=offset)
    return px.reshape(height, width).copy()


def write_pgm(plane: np.ndarray, path: str | Path) -> None:
    plane = np.asarray(plane, dtype=np.uint8)
    if plane.ndim != 2:
        raise ValueError("PGM plane must be 2-dimensional")
    header = f"P5\n{plane.shape[1]} {plane.shape[0]}\n255\n".encode()
    Path(path).write_bytes(header + plane.tobytes())
