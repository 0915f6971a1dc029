"""Indexed triangle mesh: data model, OFF/OBJ I/O, normalization, face areas."""

import os

import numpy as np

__all__ = [
    "Mesh",
    "MeshError",
    "MeshParseError",
    "DegenerateExtentError",
    "load_mesh",
    "save_mesh",
    "normalize_unit_sphere",
    "compute_face_areas",
]


class MeshError(Exception):
    pass


class MeshParseError(MeshError):
    """Raised on malformed mesh files; carries the offending line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
        if line is not None:
            prefix += f"{line}:"
        super().__init__(f"{prefix} {message}" if prefix else message)


class DegenerateExtentError(MeshError):
    """All vertices coincide, so no normalization scale exists."""


class Mesh:
    """Triangle mesh as a vertex position array and a face index-triple array.

    vertices : (n, 3) float64, model coordinates
    faces    : (m, 3) int64, zero-based indices into vertices

    Operations in this package treat a Mesh as an immutable value and return
    new instances; sharing a Mesh read-only across threads is safe.
    """

    __slots__ = ("vertices", "faces")

    def __init__(self, vertices, faces, validate=True):
        v = np.ascontiguousarray(vertices, dtype=np.float64)
        f = np.ascontiguousarray(faces, dtype=np.int64)
        if v.size == 0:
            v = v.reshape(0, 3)
        if f.size == 0:
            f = f.reshape(0, 3)
        if v.ndim != 2 or v.shape[1] != 3:
            raise MeshError(f"vertices must be (n, 3), got {v.shape}")
        if f.ndim != 2 or f.shape[1] != 3:
            raise MeshError(f"faces must be (m, 3), got {f.shape}")
        if validate:
            if not np.isfinite(v).all():
                raise MeshError("non-finite vertex coordinate")
            if f.size and (f.min() < 0 or f.max() >= len(v)):
                raise MeshError("face index out of range")
        self.vertices = v
        self.faces = f

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def copy(self):
        return Mesh(self.vertices.copy(), self.faces.copy(), validate=False)

    def triangles(self):
        """Face corner positions, shape (m, 3, 3)."""
        return self.vertices[self.faces]

    def face_normals(self, normalized=True):
        """Per-face normals from the winding (p2-p1) x (p3-p1).

        Degenerate faces yield the zero vector (also when normalized).
        """
        tri = self.triangles()
        n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        if normalized:
            lens = np.linalg.norm(n, axis=1)
            ok = lens > 0
            n[ok] /= lens[ok, None]
        return n

    def bounds(self):
        """(min_corner, max_corner) over all vertices."""
        if self.n_vertices == 0:
            raise MeshError("empty mesh has no bounds")
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def __repr__(self):
        return f"Mesh({self.n_vertices} vertices, {self.n_faces} faces)"


def same_mesh(a, b):
    """Exact structural equality: identical coordinates and face triples."""
    return np.array_equal(a.vertices, b.vertices) and np.array_equal(a.faces, b.faces)


# ---------------------------------------------------------------------------
# file I/O

_FORMATS = ("off", "obj")


def _infer_format(path, fmt):
    if fmt is not None:
        fmt = fmt.lower()
        if fmt not in _FORMATS:
            raise MeshError(f"unsupported format {fmt!r} (use 'off' or 'obj')")
        return fmt
    ext = os.path.splitext(str(path))[1].lower().lstrip(".")
    if ext in _FORMATS:
        return ext
    raise MeshError(f"cannot infer format from {path!r}; pass format='off' or 'obj'")


def _fan_triangulate(poly, n_vertices, path, line_no):
    for idx in poly:
        if idx < 0 or idx >= n_vertices:
            raise MeshParseError(f"vertex index {idx} out of range", path, line_no)
    if len(poly) < 3:
        raise MeshParseError(f"face with {len(poly)} vertices", path, line_no)
    return [(poly[0], poly[k], poly[k + 1]) for k in range(1, len(poly) - 1)]


def _parse_floats(tokens, count, path, line_no):
    try:
        vals = [float(t) for t in tokens[:count]]
    except ValueError:
        raise MeshParseError(f"expected {count} numbers, got {tokens!r}", path, line_no) from None
    if len(vals) < count:
        raise MeshParseError(f"expected {count} numbers, got {len(vals)}", path, line_no)
    if not all(np.isfinite(vals)):
        raise MeshParseError(f"non-finite coordinate in {tokens!r}", path, line_no)
    return vals


def _load_off(path):
    # One logical record per content line; comments and blanks are skipped.
    with open(path, "r") as fh:
        records = []
        for ln, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].split()
            if body:
                records.append((body, ln))
    if not records:
        raise MeshParseError("empty file", path, 1)

    head, head_ln = records[0]
    if head[0] == "OFF":
        head = head[1:]
    elif head[0].startswith("OFF"):
        # ModelNet40 quirk: counts glued to the header ("OFF490 518 0")
        head = [head[0][3:]] + head[1:]
    else:
        raise MeshParseError(f"missing OFF header, got {head[0]!r}", path, head_ln)

    pos = 1
    if not head:
        if len(records) < 2:
            raise MeshParseError("missing element counts", path, head_ln)
        head, head_ln = records[1]
        pos = 2
    try:
        nv, nf = int(head[0]), int(head[1])
    except (ValueError, IndexError):
        raise MeshParseError(f"bad element counts {head!r}", path, head_ln) from None

    if len(records) < pos + nv + nf:
        raise MeshParseError(
            f"expected {nv} vertex and {nf} face lines", path, records[-1][1]
        )

    vertices = np.empty((nv, 3), dtype=np.float64)
    for i in range(nv):
        toks, ln = records[pos + i]
        vertices[i] = _parse_floats(toks, 3, path, ln)

    faces = []
    for i in range(nf):
        toks, ln = records[pos + nv + i]
        try:
            k = int(toks[0])
            poly = [int(t) for t in toks[1 : 1 + k]]
        except ValueError:
            raise MeshParseError(f"bad face record {toks!r}", path, ln) from None
        if len(poly) < k:
            raise MeshParseError(f"face lists {k} vertices, found {len(poly)}", path, ln)
        # anything after the k indices (per-face color) is ignored
        faces.extend(_fan_triangulate(poly, nv, path, ln))

    return Mesh(vertices, np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def _load_obj(path):
    vertices = []
    faces = []
    with open(path, "r") as fh:
        for ln, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            parts = body.split()
            key = parts[0]
            if key == "v":
                vertices.append(_parse_floats(parts[1:], 3, path, ln))
            elif key == "f":
                poly = []
                for token in parts[1:]:
                    ref = token.split("/", 1)[0]
                    try:
                        idx = int(ref)
                    except ValueError:
                        raise MeshParseError(f"bad face index {token!r}", path, ln) from None
                    if idx > 0:
                        idx -= 1  # OBJ is 1-based
                    else:
                        idx += len(vertices)  # negative = relative to current count
                    poly.append(idx)
                faces.extend(_fan_triangulate(poly, len(vertices), path, ln))
            # vn/vt/usemtl/o/g/s and friends are ignored
    return Mesh(
        np.asarray(vertices, dtype=np.float64).reshape(-1, 3),
        np.asarray(faces, dtype=np.int64).reshape(-1, 3),
    )


def load_mesh(path, format=None):
    """Load an OFF or OBJ file as a triangle Mesh.

    Polygonal faces are fan-triangulated from their first vertex; OBJ's
    1-based (and negative, relative) indices are rebased to zero. Normals,
    texture coordinates and materials are ignored.
    """
    fmt = _infer_format(path, format)
    if fmt == "off":
        return _load_off(path)
    return _load_obj(path)


def save_mesh(mesh, path, format=None):
    """Write a Mesh as OFF or OBJ (geometry only).

    Coordinates are written with 17 significant digits, so a load after save
    reproduces them exactly and face triples verbatim.
    """
    fmt = _infer_format(path, format)
    lines = []
    if fmt == "off":
        lines.append("OFF")
        lines.append(f"{mesh.n_vertices} {mesh.n_faces} 0")
        for x, y, z in mesh.vertices:
            lines.append(f"{x:.17g} {y:.17g} {z:.17g}")
        for a, b, c in mesh.faces:
            lines.append(f"3 {a} {b} {c}")
    else:
        for x, y, z in mesh.vertices:
            lines.append(f"v {x:.17g} {y:.17g} {z:.17g}")
        for a, b, c in mesh.faces:
            lines.append(f"f {a + 1} {b + 1} {c + 1}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# geometry

def normalize_unit_sphere(mesh):
    """Center the bounding box at the origin and scale so max ||v|| = 1.

    Faces are untouched. Raises DegenerateExtentError when every vertex
    coincides (no scale is defined).
    """
    if mesh.n_vertices == 0:
        raise MeshError("cannot normalize an empty mesh")
    lo, hi = mesh.bounds()
    center = 0.5 * (lo + hi)
    shifted = mesh.vertices - center
    radius = np.linalg.norm(shifted, axis=1).max()
    if radius <= 0.0:
        raise DegenerateExtentError("all vertices coincide; unit-sphere scale undefined")
    return Mesh(shifted / radius, mesh.faces.copy(), validate=False)


def compute_face_areas(mesh):
    """Per-face areas ||(v2-v1) x (v3-v1)|| / 2 and their sum.

    Returns (areas, total). Degenerate faces contribute zero.
    """
    tri = mesh.triangles()
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    areas = 0.5 * np.linalg.norm(cross, axis=1)
    return areas, float(areas.sum())
