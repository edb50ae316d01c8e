"""Triangle-soup mesh type, Wavefront OBJ ingestion, and normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, ObjParseError

DEFAULT_GRAY = 0.7  # albedo for vertices without an explicit color


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TriangleMesh:
    """Indexed triangle soup with optional per-vertex color and UV.

    Vertices are float64 (n, 3); faces are int32 (m, 3) indices into the
    vertex list. Arrays are made read-only so instances can be shared across
    threads and processes without copies.
    """

    vertices: np.ndarray
    faces: np.ndarray
    colors: np.ndarray | None = None
    uvs: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=np.float64)
        f = np.asarray(self.faces, dtype=np.int32)
        if v.ndim != 2 or v.shape[1] != 3:
            raise GeometryError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise GeometryError(f"faces must be (m, 3) triangles, got {f.shape}")
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise GeometryError("face index out of range")
        object.__setattr__(self, "vertices", _frozen(v))
        object.__setattr__(self, "faces", _frozen(f))
        if self.colors is not None:
            c = np.asarray(self.colors, dtype=np.float64)
            if c.shape != (len(v), 3):
                raise GeometryError("colors must be (n, 3)")
            object.__setattr__(self, "colors", _frozen(c))
        if self.uvs is not None:
            t = np.asarray(self.uvs, dtype=np.float64)
            if t.shape != (len(v), 2):
                raise GeometryError("uvs must be (n, 2)")
            object.__setattr__(self, "uvs", _frozen(t))

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_faces(self) -> int:
        return len(self.faces)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned (min, max) corners."""
        if not len(self.vertices):
            raise GeometryError("empty mesh has no bbox")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def with_vertices(self, vertices: np.ndarray) -> "TriangleMesh":
        return TriangleMesh(vertices, self.faces, self.colors, self.uvs)


@dataclass(frozen=True)
class Plane:
    """Oriented plane through `point` with unit `normal`."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=np.float64).reshape(3)
        n = np.asarray(self.normal, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise GeometryError("plane normal must be unit length")
        object.__setattr__(self, "point", _frozen(p))
        object.__setattr__(self, "normal", _frozen(n))

    @classmethod
    def through(cls, point, direction) -> "Plane":
        """Plane through `point` with normal along (unnormalized) `direction`."""
        d = np.asarray(direction, dtype=np.float64)
        return cls(point, d / np.linalg.norm(d))

    def signed_distance(self, points: np.ndarray) -> np.ndarray:
        """x.n - p.n for each point; >= 0 means on/above the plane."""
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        return pts @ self.normal - float(self.point @ self.normal)


@dataclass(frozen=True)
class NormalizeTransform:
    """Maps source coordinates into the normalized frame: x' = (x + translation) * scale."""

    translation: np.ndarray
    scale: float

    def __post_init__(self):
        if self.scale <= 0:
            raise GeometryError("scale must be positive")
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        object.__setattr__(self, "translation", _frozen(t))

    def apply(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) + self.translation) * self.scale

    def invert(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) / self.scale - self.translation


def parse_obj(raw: bytes) -> TriangleMesh:
    """Parse a Wavefront OBJ byte stream into a triangle mesh.

    Supported subset: v (with optional r g b color extension), vt, vn, f with
    polygonal faces (fan-triangulated) and negative (relative) indices.
    Materials, groups, and smoothing directives are ignored; vn data is parsed
    but dropped since renders use face normals.

    Raises ObjParseError with a 1-based line number on malformed input or when
    no faces survive parsing.
    """
    text = raw.decode("utf-8", errors="replace")
    positions: list[list[float]] = []
    colors: list[list[float] | None] = []
    texcoords: list[list[float]] = []
    faces: list[tuple[int, int, int]] = []
    vertex_uv: dict[int, int] = {}
    any_color = False

    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        toks = line.split()
        tag = toks[0]
        if tag == "v":
            try:
                vals = [float(t) for t in toks[1:]]
            except ValueError:
                raise ObjParseError(f"bad vertex line: {line!r}", lineno)
            if len(vals) < 3:
                raise ObjParseError("vertex needs 3 coordinates", lineno)
            positions.append(vals[:3])
            if len(vals) >= 6:
                colors.append(vals[3:6])
                any_color = True
            else:
                colors.append(None)
        elif tag == "vt":
            try:
                vals = [float(t) for t in toks[1:]]
            except ValueError:
                raise ObjParseError(f"bad texcoord line: {line!r}", lineno)
            if len(vals) < 2:
                raise ObjParseError("texcoord needs 2 coordinates", lineno)
            texcoords.append(vals[:2])
        elif tag == "f":
            if len(toks) < 4:
                raise ObjParseError("face needs at least 3 vertices", lineno)
            corners = []
            for ref in toks[1:]:
                fields = ref.split("/")
                try:
                    vi = int(fields[0])
                except ValueError:
                    raise ObjParseError(f"bad face index {ref!r}", lineno)
                vi = vi - 1 if vi > 0 else len(positions) + vi
                if not 0 <= vi < len(positions):
                    raise ObjParseError(f"face index {fields[0]} out of range", lineno)
                ti = None
                if len(fields) > 1 and fields[1]:
                    ti = int(fields[1])
                    ti = ti - 1 if ti > 0 else len(texcoords) + ti
                    if not 0 <= ti < len(texcoords):
                        raise ObjParseError(f"texcoord index {fields[1]} out of range", lineno)
                    vertex_uv[vi] = ti
                corners.append(vi)
            for i in range(2, len(corners)):
                faces.append((corners[0], corners[i - 1], corners[i]))
        # mtllib/usemtl/o/g/s/l/vn: ignored

    if not faces:
        raise ObjParseError("no faces in OBJ input")

    color_arr = None
    if any_color:
        color_arr = np.array(
            [c if c is not None else [DEFAULT_GRAY] * 3 for c in colors], dtype=np.float64
        )
    uv_arr = None
    if vertex_uv:
        uv_arr = np.zeros((len(positions), 2), dtype=np.float64)
        for vi, ti in vertex_uv.items():
            uv_arr[vi] = texcoords[ti]
    return TriangleMesh(np.array(positions), np.array(faces, dtype=np.int32), color_arr, uv_arr)


def mesh_to_obj(mesh: TriangleMesh) -> bytes:
    """Serialize a mesh to OBJ (inverse of parse_obj on the supported subset)."""
    lines = []
    has_uv = mesh.uvs is not None
    for i, v in enumerate(mesh.vertices):
        if mesh.colors is not None:
            c = mesh.colors[i]
            lines.append("v %.9g %.9g %.9g %.9g %.9g %.9g" % (v[0], v[1], v[2], c[0], c[1], c[2]))
        else:
            lines.append("v %.9g %.9g %.9g" % (v[0], v[1], v[2]))
    if has_uv:
        for t in mesh.uvs:
            lines.append("vt %.9g %.9g" % (t[0], t[1]))
    for f in mesh.faces:
        if has_uv:
            lines.append("f %d/%d %d/%d %d/%d" % (f[0] + 1, f[0] + 1, f[1] + 1, f[1] + 1, f[2] + 1, f[2] + 1))
        else:
            lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    return ("\n".join(lines) + "\n").encode("utf-8")


def normalize_mesh(
    mesh: TriangleMesh, longest_side: float = 1.0
) -> tuple[TriangleMesh, NormalizeTransform]:
    """Center the bbox at the origin and scale its longest side to `longest_side`.

    Returns the normalized mesh and the transform that maps source coordinates
    into the normalized frame (invertible for round-tripping results back).
    """
    if mesh.num_faces < 1:
        raise GeometryError("mesh has no faces")
    lo, hi = mesh.bbox()
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0.0:
        raise GeometryError("degenerate bbox: zero extent on all axes")
    center = (lo + hi) / 2.0
    scale = longest_side / longest
    transform = NormalizeTransform(translation=-center, scale=scale)
    return mesh.with_vertices(transform.apply(mesh.vertices)), transform


def face_midpoints(mesh: TriangleMesh) -> np.ndarray:
    """Per-face midpoint (v1 + v2 + v3) / 3, order-aligned with the face list."""
    v = mesh.vertices
    f = mesh.faces
    return (v[f[:, 0]] + v[f[:, 1]] + v[f[:, 2]]) / 3.0
