"""Self-intersection detection and remeshing: split crossing faces along their
intersection segments and retriangulate each face in its own plane."""

from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .cleanup import remove_duplicate_faces, remove_duplicate_vertices
from .mesh import Mesh
from .spatial import TRI_EPS, build_aabb_tree
from .triangulate import TriangulationError, triangulate_face

__all__ = [
    "RemeshResult",
    "detect_self_intersections",
    "remesh_self_intersections",
    "remesh_until_clean",
    "SNAP_EPS",
]

# absolute snapping tolerance for segment points, at unit-sphere scale
SNAP_EPS = 1e-9


class RemeshResult(NamedTuple):
    mesh: Mesh
    remeshed_face_count: int
    failed_faces: list


def _classified_pairs(mesh, eps):
    """Box-overlapping face pairs classified by the narrow phase.

    Returns (proper, coplanar): proper is a list of (i, j, segment) with
    i < j, coplanar a list of (i, j). Pairs with a degenerate member are
    skipped; those faces belong to the degenerate-face cleanup pass.
    """
    from .spatial import tri_tri_intersect, TriTriKind

    tree = build_aabb_tree(mesh)
    lo, hi = mesh.bounds()
    margin = eps * float((hi - lo).max())
    tri = mesh.triangles()
    proper = []
    coplanar = []
    seg = np.empty((2, 3))
    for i, j in tree.overlapping_pairs(margin):
        code = K.tri_tri_classify(tri[i], tri[j], eps, seg)
        if code == K.TT_PROPER:
            proper.append((i, j, seg.copy()))
        elif code == K.TT_COPLANAR:
            res = tri_tri_intersect(tri[i], tri[j], eps)
            if res.kind == TriTriKind.COPLANAR:
                coplanar.append((i, j))
    return proper, coplanar


def detect_self_intersections(mesh, eps=TRI_EPS):
    """Unordered face pairs whose intersection is a proper segment or a
    coplanar overlap; broad phase through the AABB tree."""
    proper, coplanar = _classified_pairs(mesh, eps)
    return sorted({(i, j) for i, j, _ in proper} | set(coplanar))


def _remesh_one_face(mesh, face_id, segments, samples_per_segment, snap):
    """Retriangulate one face against its constraint segments.

    Returns (new_points_3d, triangles) where triangles index the face's own
    corners as 0..2 and the new points from 3 on.
    """
    p1, p2, p3 = mesh.faces[face_id]
    c0, c1, c2 = mesh.vertices[p1], mesh.vertices[p2], mesh.vertices[p3]
    normal = np.cross(c1 - c0, c2 - c0)
    ln = np.linalg.norm(normal)
    if ln <= 0:
        raise TriangulationError("degenerate face")
    w = normal / ln
    u = (c1 - c0) / np.linalg.norm(c1 - c0)
    v = np.cross(w, u)

    def to2d(p):
        d = p - c0
        return np.array([d @ u, d @ v])

    corners3d = [c0, c1, c2]
    corners2d = [to2d(c) for c in corners3d]
    pts3d = []
    pts2d = []
    constraint_edges = []

    def point_id(p):
        for k in range(3):
            if np.linalg.norm(p - corners3d[k]) <= snap:
                return k
        for k, q in enumerate(pts3d):
            if np.linalg.norm(p - q) <= snap:
                return 3 + k
        pts3d.append(p.copy())
        pts2d.append(to2d(p))
        return 3 + len(pts3d) - 1

    for seg in segments:
        a, b = seg
        ts = np.linspace(0.0, 1.0, samples_per_segment)
        ids = [point_id(a + t * (b - a)) for t in ts]
        for s, e in zip(ids, ids[1:]):
            if s != e:
                constraint_edges.append((s, e))

    verts2d, tris = triangulate_face(corners2d, pts2d, constraint_edges, snap)

    # lift any crossing-split points added by the triangulator back to 3D
    for k in range(3 + len(pts3d), len(verts2d)):
        x, y = verts2d[k]
        pts3d.append(c0 + x * u + y * v)

    # inherit the parent winding
    all3d = corners3d + pts3d
    fixed = []
    for i, j, k in tris:
        n = np.cross(all3d[j] - all3d[i], all3d[k] - all3d[i])
        fixed.append((i, j, k) if n @ w > 0 else (i, k, j))
    return pts3d, fixed


def remesh_self_intersections(mesh, samples_per_segment=2, eps=TRI_EPS, snap=SNAP_EPS):
    """Split every face involved in a proper-segment intersection.

    Each involved face gathers all its intersection segments, places
    samples_per_segment equally spaced points on each (endpoints included)
    and is retriangulated in its plane with the segments as constraint
    edges. Sub-faces inherit the parent winding; untouched faces keep their
    order. Points shared by a pair are emitted once per face and merged by
    the follow-up duplicate-vertex pass.

    Faces whose retriangulation fails are kept unmodified and listed in
    RemeshResult.failed_faces.
    """
    if samples_per_segment < 2:
        raise ValueError("samples_per_segment must be >= 2")
    proper, _ = _classified_pairs(mesh, eps)

    constraints = {}
    for i, j, seg in proper:
        constraints.setdefault(i, []).append(seg)
        constraints.setdefault(j, []).append(seg)
    if not constraints:
        return RemeshResult(mesh.copy(), 0, [])

    new_vertices = []
    new_faces = []
    failed = []
    remeshed = 0
    base = mesh.n_vertices
    for f in range(mesh.n_faces):
        if f not in constraints:
            new_faces.append(tuple(mesh.faces[f]))
            continue
        try:
            pts3d, tris = _remesh_one_face(
                mesh, f, constraints[f], samples_per_segment, snap
            )
        except TriangulationError:
            failed.append(f)
            new_faces.append(tuple(mesh.faces[f]))
            continue
        remeshed += 1
        offset = base + len(new_vertices)
        local = list(mesh.faces[f]) + list(range(offset, offset + len(pts3d)))
        new_vertices.extend(pts3d)
        for i, j, k in tris:
            new_faces.append((local[i], local[j], local[k]))

    verts = mesh.vertices
    if new_vertices:
        verts = np.vstack([verts, np.asarray(new_vertices)])
    out = Mesh(verts, np.asarray(new_faces, dtype=np.int64), validate=False)
    return RemeshResult(out, remeshed, failed)


def remesh_until_clean(
    mesh,
    samples_per_segment=2,
    eps=TRI_EPS,
    snap=SNAP_EPS,
    dedup_tolerance=SNAP_EPS,
    max_passes=3,
):
    """Remesh + dedup cycles until no proper-segment pair remains.

    One pass resolves generic crossings; the bounded retry mops up
    T-junction leftovers on pathological inputs. Returns
    (mesh, info) with info = {passes, remeshed_faces, failed_faces,
    residual_pairs}.
    """
    current = mesh
    info = {"passes": 0, "remeshed_faces": 0, "failed_faces": [], "residual_pairs": []}
    for _ in range(max_passes):
        proper, _ = _classified_pairs(current, eps)
        if not proper:
            return current, info
        res = remesh_self_intersections(current, samples_per_segment, eps, snap)
        current = res.mesh
        info["passes"] += 1
        info["remeshed_faces"] += res.remeshed_face_count
        info["failed_faces"].extend(res.failed_faces)
        current, _, _ = remove_duplicate_vertices(current, dedup_tolerance)
        current, _ = remove_duplicate_faces(current)
        if res.remeshed_face_count == 0:
            break  # nothing changed; retrying cannot help
    proper, _ = _classified_pairs(current, eps)
    info["residual_pairs"] = [(i, j) for i, j, _ in proper]
    return current, info
