"""Quadric-error-metric edge-collapse simplification to a target vertex count."""

import heapq

import numpy as np

from .cleanup import remove_degenerate_faces, remove_duplicate_faces
from .mesh import Mesh

__all__ = ["simplify_to", "vertex_quadrics", "quadric_error", "BOUNDARY_WEIGHT"]

BOUNDARY_WEIGHT = 1e3
_COND_LIMIT = 1e12
_MIN_VERTICES = 4


def _plane_quadric(normal, point):
    d = -normal @ point
    p = np.array([normal[0], normal[1], normal[2], d])
    return np.outer(p, p)


def vertex_quadrics(mesh, boundary_weight=BOUNDARY_WEIGHT):
    """Per-vertex 4x4 quadrics: incident-plane sum plus boundary penalties.

    Boundary edges (edges used by exactly one face) contribute a weighted
    plane through the edge, perpendicular to the incident face, pinning open
    borders in place.
    """
    n = mesh.n_vertices
    quads = np.zeros((n, 4, 4))
    tri = mesh.triangles()
    normals = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    lens = np.linalg.norm(normals, axis=1)

    edge_faces = {}
    for f, (a, b, c) in enumerate(mesh.faces):
        if lens[f] <= 0:
            continue
        nrm = normals[f] / lens[f]
        q = _plane_quadric(nrm, tri[f, 0])
        for v in (a, b, c):
            quads[v] += q
        for e in ((a, b), (b, c), (c, a)):
            key = (min(e), max(e))
            cnt, _ = edge_faces.get(key, (0, f))
            edge_faces[key] = (cnt + 1, f)

    for (a, b), (cnt, f) in edge_faces.items():
        if cnt != 1 or lens[f] <= 0:
            continue
        edge = mesh.vertices[b] - mesh.vertices[a]
        m = np.cross(edge, normals[f] / lens[f])
        lm = np.linalg.norm(m)
        if lm <= 0:
            continue
        q = boundary_weight * _plane_quadric(m / lm, mesh.vertices[a])
        quads[a] += q
        quads[b] += q
    return quads


def quadric_error(quadric, point):
    """Squared plane-distance error of `point` under a 4x4 quadric."""
    h = np.array([point[0], point[1], point[2], 1.0])
    return float(h @ quadric @ h)


def _placement(quadric, pa, pb, box_lo, box_hi):
    """Optimal collapse position, falling back to the best endpoint/midpoint
    when the 3x3 system is ill-conditioned; clamped to the inflated box."""
    A = quadric[:3, :3]
    bvec = -quadric[:3, 3]
    pos = None
    try:
        inv = np.linalg.inv(A)
        cond = np.linalg.norm(A) * np.linalg.norm(inv)
        if cond < _COND_LIMIT:
            pos = inv @ bvec
    except np.linalg.LinAlgError:
        pos = None
    if pos is None:
        candidates = (pa, pb, 0.5 * (pa + pb))
        errs = [quadric_error(quadric, c) for c in candidates]
        pos = candidates[int(np.argmin(errs))]
    pos = np.minimum(np.maximum(pos, box_lo), box_hi)
    return pos, quadric_error(quadric, pos)


class _CollapseState:
    def __init__(self, mesh, boundary_weight):
        self.pos = mesh.vertices.copy()
        self.quads = vertex_quadrics(mesh, boundary_weight)
        self.faces = [tuple(f) for f in mesh.faces]
        self.face_alive = [True] * len(self.faces)
        self.vert_alive = np.ones(mesh.n_vertices, dtype=bool)
        self.v_faces = [set() for _ in range(mesh.n_vertices)]
        for f, (a, b, c) in enumerate(self.faces):
            self.v_faces[a].add(f)
            self.v_faces[b].add(f)
            self.v_faces[c].add(f)
        self.version = np.zeros(mesh.n_vertices, dtype=np.int64)
        lo, hi = mesh.bounds()
        ext = hi - lo
        pad = 0.01 * np.where(ext > 0, ext, ext.max() if ext.max() > 0 else 1.0)
        self.box_lo = lo - pad
        self.box_hi = hi + pad
        self.heap = []

    def neighbors(self, u):
        out = set()
        for f in self.v_faces[u]:
            for v in self.faces[f]:
                if v != u:
                    out.add(v)
        return out

    def push_edge(self, u, v):
        a, b = (u, v) if u < v else (v, u)
        q = self.quads[a] + self.quads[b]
        pos, err = _placement(q, self.pos[a], self.pos[b], self.box_lo, self.box_hi)
        heapq.heappush(
            self.heap,
            (err, a, b, int(self.version[a]), int(self.version[b]),
             pos[0], pos[1], pos[2]),
        )

    def push_all_edges(self):
        edges = set()
        for f, alive in enumerate(self.face_alive):
            if not alive:
                continue
            a, b, c = self.faces[f]
            edges.update({(min(a, b), max(a, b)), (min(b, c), max(b, c)),
                          (min(c, a), max(c, a))})
        for a, b in sorted(edges):
            self.push_edge(a, b)

    def _face_normal(self, f, moved=None, target=None):
        idx = self.faces[f]
        pts = []
        for v in idx:
            if moved is not None and v in moved:
                pts.append(target)
            else:
                pts.append(self.pos[v])
        return np.cross(pts[1] - pts[0], pts[2] - pts[0])

    def try_collapse(self, a, b, target):
        """Collapse edge (a, b) into `a` placed at `target`; False if the
        move would flip or flatten any surviving incident face."""
        dying = self.v_faces[a] & self.v_faces[b]
        moved = {a, b}
        for f in (self.v_faces[a] | self.v_faces[b]) - dying:
            before = self._face_normal(f)
            after = self._face_normal(f, moved, target)
            la = np.linalg.norm(after)
            if la <= 0 or before @ after <= 0:
                return False

        for f in dying:
            for v in self.faces[f]:
                self.v_faces[v].discard(f)
            self.face_alive[f] = False
        for f in sorted(self.v_faces[b]):
            self.faces[f] = tuple(a if v == b else v for v in self.faces[f])
            self.v_faces[a].add(f)
        self.v_faces[b] = set()
        self.pos[a] = target
        self.quads[a] = self.quads[a] + self.quads[b]
        self.vert_alive[b] = False
        self.version[a] += 1
        self.version[b] += 1

        # collapses can fold two faces onto the same vertex set; keep the first
        seen = {}
        for f in sorted(self.v_faces[a]):
            key = frozenset(self.faces[f])
            if key in seen:
                for v in self.faces[f]:
                    self.v_faces[v].discard(f)
                self.face_alive[f] = False
            else:
                seen[key] = f
        return True


def simplify_to(mesh, target_vertices, boundary_weight=BOUNDARY_WEIGHT):
    """Greedy minimum-cost edge collapses until at most max(target, 4) vertices.

    Collapse positions solve the summed quadric; ill-conditioned systems fall
    back to the endpoints/midpoint. A collapse is rejected when it would flip
    (or zero out) the normal of any surviving incident face. Ties break on
    the (min index, max index) edge key, so the result is deterministic. The
    output carries no duplicate or degenerate faces.
    """
    target = max(int(target_vertices), _MIN_VERTICES)
    if mesh.n_vertices <= target or mesh.n_faces == 0:
        return mesh.copy()

    st = _CollapseState(mesh, boundary_weight)
    st.push_all_edges()
    alive = int(st.vert_alive.sum())
    rebuilds = 0
    while alive > target:
        if not st.heap:
            # positions changed since rejected pushes; one fresh sweep may
            # unlock collapses that previously flipped normals
            if rebuilds >= 2:
                break
            rebuilds += 1
            st.push_all_edges()
            if not st.heap:
                break
            continue
        err, a, b, va, vb, x, y, z = heapq.heappop(st.heap)
        if va != st.version[a] or vb != st.version[b]:
            continue
        if not (st.vert_alive[a] and st.vert_alive[b]):
            continue
        if b not in st.neighbors(a):
            continue
        if st.try_collapse(a, b, np.array([x, y, z])):
            alive -= 1
            for w in sorted(st.neighbors(a)):
                st.push_edge(a, w)

    keep = np.nonzero(st.vert_alive)[0]
    remap = np.full(mesh.n_vertices, -1, dtype=np.int64)
    remap[keep] = np.arange(len(keep), dtype=np.int64)
    faces = [st.faces[f] for f, ok in enumerate(st.face_alive) if ok]
    out = Mesh(st.pos[keep], remap[np.asarray(faces, dtype=np.int64)], validate=False)
    # safety net; collapse bookkeeping should already have handled both
    out, _ = remove_duplicate_faces(out)
    out, _ = remove_degenerate_faces(out)
    return out
