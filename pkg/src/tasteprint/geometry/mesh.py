"""Triangle mesh loading for binary STL, ASCII STL, and Wavefront OBJ.

Coordinates are taken verbatim as millimeters. Degenerate (zero-area)
triangles are dropped with a warning instead of failing the load.
"""

from __future__ import annotations

import hashlib
import struct
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from tasteprint.errors import EmptyMeshError, MeshParseError

STL_RECORD = struct.Struct("<12fH")  # normal, 3 vertices, attribute count
_DEGENERATE_AREA = 1e-12


class DegenerateTriangleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class TriangleMesh:
    """Triangle soup in mm with a tight axis-aligned bounding box."""

    triangles: np.ndarray  # (n, 3, 3) float64
    source_hash: str = ""

    def __post_init__(self):
        tri = np.asarray(self.triangles, dtype=float)
        if tri.ndim != 3 or tri.shape[1:] != (3, 3):
            raise ValueError("triangles must have shape (n, 3, 3)")
        if tri.shape[0] == 0:
            raise EmptyMeshError("mesh contains no triangles")
        if not np.isfinite(tri).all():
            raise ValueError("mesh contains non-finite vertices")
        object.__setattr__(self, "triangles", tri)

    @property
    def triangle_count(self) -> int:
        return int(self.triangles.shape[0])

    @property
    def vertex_count(self) -> int:
        """Count of distinct vertex positions."""
        flat = self.triangles.reshape(-1, 3)
        return int(np.unique(flat, axis=0).shape[0])

    @property
    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        flat = self.triangles.reshape(-1, 3)
        return flat.min(axis=0), flat.max(axis=0)


def _triangle_areas(tri: np.ndarray) -> np.ndarray:
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    return 0.5 * np.linalg.norm(np.cross(e1, e2), axis=1)


def _drop_degenerate(tri: np.ndarray, path: str) -> np.ndarray:
    if tri.shape[0] == 0:
        return tri
    keep = _triangle_areas(tri) > _DEGENERATE_AREA
    dropped = int(np.count_nonzero(~keep))
    if dropped:
        warnings.warn(
            f"dropped {dropped} degenerate triangle(s) from {path}",
            DegenerateTriangleWarning,
            stacklevel=3,
        )
    return tri[keep]


def load_mesh(path: str | Path, format: str = "auto") -> TriangleMesh:
    """Load a mesh file. ``format`` is one of stl_binary, stl_ascii, obj, auto."""
    path = Path(path)
    data = path.read_bytes()
    if format == "auto":
        format = sniff_format(path.name, data)
    if format == "stl_binary":
        tri = _parse_stl_binary(data, str(path))
    elif format == "stl_ascii":
        tri = _parse_stl_ascii(data, str(path))
    elif format == "obj":
        tri = _parse_obj(data, str(path))
    else:
        raise MeshParseError(f"unknown mesh format {format!r}", path=str(path))
    tri = _drop_degenerate(tri, str(path))
    if tri.shape[0] == 0:
        raise EmptyMeshError(f"{path}: mesh contains no usable triangles")
    return TriangleMesh(tri, source_hash=hashlib.sha256(data).hexdigest())


def sniff_format(name: str, data: bytes) -> str:
    lower = name.lower()
    if lower.endswith(".obj"):
        return "obj"
    if lower.endswith(".stl"):
        # ASCII STL starts with "solid" AND parses as text; binary files can
        # also start with "solid", so verify the record arithmetic first.
        if len(data) >= 84:
            (count,) = struct.unpack_from("<I", data, 80)
            if len(data) == 84 + 50 * count:
                return "stl_binary"
        if data.lstrip()[:5] == b"solid":
            return "stl_ascii"
        return "stl_binary"
    raise MeshParseError(f"cannot infer mesh format from name {name!r}")


def _parse_stl_binary(data: bytes, path: str) -> np.ndarray:
    if len(data) < 84:
        raise MeshParseError(
            "binary STL shorter than 84-byte header", path=path, offset=len(data)
        )
    (count,) = struct.unpack_from("<I", data, 80)
    expected = 84 + 50 * count
    if len(data) < expected:
        raise MeshParseError(
            f"binary STL truncated: header declares {count} triangles "
            f"({expected} bytes) but file has {len(data)}",
            path=path,
            offset=len(data),
        )
    if count == 0:
        raise EmptyMeshError(f"{path}: binary STL declares zero triangles")
    records = np.frombuffer(data, dtype=np.uint8, count=50 * count, offset=84)
    floats = records.reshape(count, 50)[:, :48].copy().view("<f4").reshape(count, 12)
    return floats[:, 3:12].astype(np.float64).reshape(count, 3, 3)


def _parse_stl_ascii(data: bytes, path: str) -> np.ndarray:
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise MeshParseError(
            "ASCII STL contains non-ASCII bytes", path=path, offset=exc.start
        ) from None
    triangles: list[list[list[float]]] = []
    current: list[list[float]] = []
    saw_solid = False
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "solid":
            saw_solid = True
        elif head == "vertex":
            if len(tokens) != 4:
                raise MeshParseError("vertex needs 3 coordinates", path=path, line=line_no)
            try:
                current.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise MeshParseError("bad vertex coordinate", path=path, line=line_no) from None
        elif head == "endfacet":
            if len(current) != 3:
                raise MeshParseError(
                    f"facet has {len(current)} vertices, expected 3", path=path, line=line_no
                )
            triangles.append(current)
            current = []
        elif head in ("facet", "outer", "endloop", "endsolid"):
            continue
        else:
            raise MeshParseError(f"unexpected token {head!r}", path=path, line=line_no)
    if not saw_solid:
        raise MeshParseError("missing 'solid' header", path=path, line=1)
    if current:
        raise MeshParseError("unterminated facet at end of file", path=path)
    if not triangles:
        raise EmptyMeshError(f"{path}: ASCII STL contains no facets")
    return np.array(triangles, dtype=np.float64)


def _parse_obj(data: bytes, path: str) -> np.ndarray:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MeshParseError("OBJ is not valid UTF-8", path=path, offset=exc.start) from None
    vertices: list[list[float]] = []
    triangles: list[list[list[float]]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        if tokens[0] == "v":
            if len(tokens) < 4:
                raise MeshParseError("v record needs 3 coordinates", path=path, line=line_no)
            try:
                vertices.append([float(t) for t in tokens[1:4]])
            except ValueError:
                raise MeshParseError("bad v coordinate", path=path, line=line_no) from None
        elif tokens[0] == "f":
            if len(tokens) < 4:
                raise MeshParseError("f record needs at least 3 vertices", path=path, line=line_no)
            idx = [_obj_index(t, len(vertices), path, line_no) for t in tokens[1:]]
            # Fan triangulation handles quads and larger convex faces.
            for a, b in zip(idx[1:], idx[2:]):
                triangles.append([vertices[idx[0]], vertices[a], vertices[b]])
        # Normals, textures, materials, groups are ignored on purpose.
    if not triangles:
        raise EmptyMeshError(f"{path}: OBJ contains no faces")
    return np.array(triangles, dtype=np.float64)


def _obj_index(token: str, n_vertices: int, path: str, line_no: int) -> int:
    ref = token.split("/", 1)[0]
    try:
        value = int(ref)
    except ValueError:
        raise MeshParseError(f"bad face index {token!r}", path=path, line=line_no) from None
    if value == 0:
        raise MeshParseError("OBJ indices are 1-based, got 0", path=path, line=line_no)
    index = value - 1 if value > 0 else n_vertices + value
    if not 0 <= index < n_vertices:
        raise MeshParseError(
            f"face index {value} out of range (have {n_vertices} vertices)",
            path=path,
            line=line_no,
        )
    return index
