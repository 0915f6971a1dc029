"""Topology cleanup passes: duplicate vertices/faces, degenerate faces, isolated vertices."""

import numpy as np

from .mesh import Mesh

__all__ = [
    "REMOVED",
    "VertexRemap",
    "remove_duplicate_vertices",
    "remove_duplicate_faces",
    "remove_degenerate_faces",
    "remove_isolated_vertices",
]

REMOVED = -1

DEGENERACY_EPSILON = 1e-12


class VertexRemap:
    """Maps old vertex indices to new ones after a vertex-removing pass.

    old_to_new[i] is the new index of old vertex i, or REMOVED (-1) for a
    deleted unreferenced vertex. Deduplicated vertices map to their surviving
    representative, never to REMOVED, so faces can always be rewritten.
    Kept vertices preserve their relative order.
    """

    __slots__ = ("old_to_new",)

    def __init__(self, old_to_new):
        self.old_to_new = np.asarray(old_to_new, dtype=np.int64)

    def apply(self, faces):
        out = self.old_to_new[faces]
        if out.size and out.min() == REMOVED:
            raise ValueError("face references a removed vertex")
        return out

    @property
    def removed(self):
        """Old indices that no longer exist as distinct vertices."""
        return np.nonzero(self.old_to_new == REMOVED)[0]


def _identity_remap(n):
    return VertexRemap(np.arange(n, dtype=np.int64))


def remove_duplicate_vertices(mesh, tolerance=0.0):
    """Collapse vertices that coincide within `tolerance`; keep the first of each group.

    A vertex survives iff no earlier *surviving* vertex lies within tolerance;
    otherwise it maps to the earliest such survivor. With tolerance 0 equality
    is exact coordinate equality. Face triples are rewritten through the remap.

    Returns (mesh, remap, removed_count). Faces that become degenerate here are
    left in place for remove_degenerate_faces.
    """
    if tolerance < 0:
        raise ValueError("tolerance must be >= 0")
    v = mesh.vertices
    n = len(v)
    if n == 0:
        return mesh.copy(), _identity_remap(0), 0

    if tolerance == 0.0:
        # Numeric equality (so -0.0 matches 0.0), vectorized through np.unique.
        uniq, inverse = np.unique(v, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        if len(uniq) == n:
            return mesh.copy(), _identity_remap(n), 0
        first_occ = np.full(len(uniq), n, dtype=np.int64)
        np.minimum.at(first_occ, inverse, np.arange(n, dtype=np.int64))
        keep = np.sort(first_occ)
        old_to_new = np.searchsorted(keep, first_occ)[inverse]
    else:
        # Grid hash with cell size = tolerance: any match lies in the 27-cell
        # neighborhood. Buckets hold survivors only, so each vertex maps to the
        # earliest surviving vertex within tolerance.
        old_to_new = np.empty(n, dtype=np.int64)
        keep = []
        cells = {}
        tol2 = tolerance * tolerance
        coords = np.floor(v / tolerance).astype(np.int64)
        for i in range(n):
            ci, cj, ck = coords[i]
            best = -1
            for di in (-1, 0, 1):
                for dj in (-1, 0, 1):
                    for dk in (-1, 0, 1):
                        bucket = cells.get((ci + di, cj + dj, ck + dk))
                        if not bucket:
                            continue
                        for j in bucket:
                            if best != -1 and j >= best:
                                continue
                            d = v[i] - v[j]
                            if d @ d <= tol2:
                                best = j
            if best == -1:
                cells.setdefault((ci, cj, ck), []).append(i)
                old_to_new[i] = len(keep)
                keep.append(i)
            else:
                old_to_new[i] = old_to_new[best]
        keep = np.asarray(keep, dtype=np.int64)

    removed = n - len(keep)
    if removed == 0:
        return mesh.copy(), _identity_remap(n), 0
    out = Mesh(v[keep], old_to_new[mesh.faces], validate=False)
    return out, VertexRemap(old_to_new), removed


def remove_duplicate_faces(mesh):
    """Drop faces whose index triples are equal as sets, keeping the first occurrence.

    Opposite-winding copies count as duplicates; the survivor keeps its
    original winding. Returns (mesh, removed_count).
    """
    f = mesh.faces
    if len(f) == 0:
        return mesh.copy(), 0
    keys = np.sort(f, axis=1)
    _, first_idx = np.unique(keys, axis=0, return_index=True)
    if len(first_idx) == len(f):
        return mesh.copy(), 0
    keep = np.sort(first_idx)
    out = Mesh(mesh.vertices.copy(), f[keep], validate=False)
    return out, len(f) - len(keep)


def remove_degenerate_faces(mesh, area_epsilon=DEGENERACY_EPSILON):
    """Remove faces collapsed to a point or segment; vertices are kept.

    A face dies iff ||e1 x e2|| <= area_epsilon * max(||e1||, ||e2||, ||e3||)^2,
    a scale-free version of the zero-cross-product test. Returns
    (mesh, removed_count).
    """
    f = mesh.faces
    if len(f) == 0:
        return mesh.copy(), 0
    tri = mesh.triangles()
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 1]
    e3 = tri[:, 0] - tri[:, 2]
    cross = np.linalg.norm(np.cross(e1, e2), axis=1)
    longest = np.maximum(
        np.linalg.norm(e1, axis=1),
        np.maximum(np.linalg.norm(e2, axis=1), np.linalg.norm(e3, axis=1)),
    )
    degenerate = cross <= area_epsilon * longest * longest
    if not degenerate.any():
        return mesh.copy(), 0
    out = Mesh(mesh.vertices.copy(), f[~degenerate], validate=False)
    return out, int(degenerate.sum())


def remove_isolated_vertices(mesh):
    """Delete vertices referenced by no face and reindex the faces.

    Surviving vertex positions are bit-identical and keep their relative
    order. Returns (mesh, remap, removed_count).
    """
    n = mesh.n_vertices
    used = np.zeros(n, dtype=bool)
    if mesh.n_faces:
        used[mesh.faces.reshape(-1)] = True
    removed = int(n - used.sum())
    if removed == 0:
        return mesh.copy(), _identity_remap(n), 0
    old_to_new = np.full(n, REMOVED, dtype=np.int64)
    old_to_new[used] = np.arange(int(used.sum()), dtype=np.int64)
    out = Mesh(mesh.vertices[used], old_to_new[mesh.faces], validate=False)
    return out, VertexRemap(old_to_new), removed
