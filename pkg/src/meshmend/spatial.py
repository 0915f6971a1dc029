"""Spatial acceleration and geometric predicates: AABB tree, tri-tri and ray queries."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels as K
from .mesh import MeshError

__all__ = [
    "AabbTree",
    "TriTriKind",
    "TriTriResult",
    "RayHit",
    "build_aabb_tree",
    "tri_tri_intersect",
    "ray_first_hit",
    "ray_escapes",
    "TRI_EPS",
    "T_MIN",
]

# relative narrow-phase tolerance, scaled by the triangle pair's extent
TRI_EPS = 1e-10
# default minimum ray parameter; origins are offset off their source face,
# so this suppresses residual self-hits at the unit-sphere scale
T_MIN = 1e-6

_LEAF_SIZE = 4


class TriTriKind(Enum):
    DISJOINT = "disjoint"
    SHARED_VERTEX_ONLY = "shared_vertex_only"
    SHARED_EDGE = "shared_edge"
    PROPER_SEGMENT = "proper_segment"
    COPLANAR = "coplanar"


_KIND_BY_CODE = {
    K.TT_DISJOINT: TriTriKind.DISJOINT,
    K.TT_SHARED_VERTEX: TriTriKind.SHARED_VERTEX_ONLY,
    K.TT_SHARED_EDGE: TriTriKind.SHARED_EDGE,
    K.TT_PROPER: TriTriKind.PROPER_SEGMENT,
}


@dataclass(frozen=True)
class TriTriResult:
    kind: TriTriKind
    segment: np.ndarray | None = None  # (2, 3) endpoints for PROPER_SEGMENT


@dataclass(frozen=True)
class RayHit:
    face: int
    t: float
    point: np.ndarray


class AabbTree:
    """Binary AABB hierarchy over the faces of one mesh snapshot.

    Built with a deterministic median split on the longest box axis; immutable
    after construction, so any number of threads may query it concurrently.
    """

    def __init__(self, mesh):
        if mesh.n_faces < 1:
            raise MeshError("cannot build an AABB tree over an empty mesh")
        tri = mesh.triangles()
        self.face_min = tri.min(axis=1)
        self.face_max = tri.max(axis=1)
        self.n_faces = mesh.n_faces
        centroids = tri.mean(axis=1)

        prim = np.arange(mesh.n_faces, dtype=np.int64)
        nmin, nmax, left, right, start, count = [], [], [], [], [], []

        def build(lo, hi):
            node = len(nmin)
            seg = prim[lo:hi]
            nmin.append(self.face_min[seg].min(axis=0))
            nmax.append(self.face_max[seg].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(lo)
            count.append(hi - lo)
            if hi - lo > _LEAF_SIZE:
                axis = int(np.argmax(nmax[node] - nmin[node]))
                order = np.argsort(centroids[seg, axis], kind="stable")
                prim[lo:hi] = seg[order]
                mid = (lo + hi) // 2
                left[node] = build(lo, mid)
                right[node] = build(mid, hi)
            return node

        build(0, mesh.n_faces)
        self.prim = prim
        self.node_min = np.ascontiguousarray(nmin)
        self.node_max = np.ascontiguousarray(nmax)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.start = np.asarray(start, dtype=np.int64)
        self.count = np.asarray(count, dtype=np.int64)

    def _flat(self):
        return (self.node_min, self.node_max, self.left, self.right,
                self.start, self.count, self.prim)

    def query_box(self, bmin, bmax, margin=0.0):
        """Face indices whose boxes overlap [bmin, bmax] (inflated by margin)."""
        bmin = np.asarray(bmin, dtype=np.float64) - margin
        bmax = np.asarray(bmax, dtype=np.float64) + margin
        out = []
        stack = [0]
        while stack:
            node = stack.pop()
            if (self.node_min[node] > bmax).any() or (bmin > self.node_max[node]).any():
                continue
            if self.left[node] < 0:
                for f in self.prim[self.start[node]: self.start[node] + self.count[node]]:
                    if not ((self.face_min[f] > bmax).any() or (bmin > self.face_max[f]).any()):
                        out.append(int(f))
            else:
                stack.append(int(self.left[node]))
                stack.append(int(self.right[node]))
        out.sort()
        return np.asarray(out, dtype=np.int64)

    def overlapping_pairs(self, margin=0.0):
        """All unordered face pairs (i < j) with overlapping boxes, sorted."""
        fmin, fmax = self.face_min, self.face_max
        pairs = []
        stack = [(0, 0)]
        while stack:
            x, y = stack.pop()
            if (self.node_min[x] - margin > self.node_max[y]).any() or (
                self.node_min[y] - margin > self.node_max[x]
            ).any():
                continue
            x_leaf = self.left[x] < 0
            y_leaf = self.left[y] < 0
            if x == y:
                if x_leaf:
                    faces = self.prim[self.start[x]: self.start[x] + self.count[x]]
                    for a in range(len(faces)):
                        for b in range(a + 1, len(faces)):
                            i, j = int(faces[a]), int(faces[b])
                            if not ((fmin[i] - margin > fmax[j]).any() or (fmin[j] - margin > fmax[i]).any()):
                                pairs.append((min(i, j), max(i, j)))
                else:
                    l, r = int(self.left[x]), int(self.right[x])
                    stack.extend([(l, l), (r, r), (l, r)])
            elif x_leaf and y_leaf:
                fx = self.prim[self.start[x]: self.start[x] + self.count[x]]
                fy = self.prim[self.start[y]: self.start[y] + self.count[y]]
                for i in fx:
                    for j in fy:
                        if i == j:
                            continue
                        i_, j_ = int(min(i, j)), int(max(i, j))
                        if not ((fmin[i_] - margin > fmax[j_]).any() or (fmin[j_] - margin > fmax[i_]).any()):
                            pairs.append((i_, j_))
            elif y_leaf or (not x_leaf and self.count[x] >= self.count[y]):
                stack.extend([(int(self.left[x]), y), (int(self.right[x]), y)])
            else:
                stack.extend([(x, int(self.left[y])), (x, int(self.right[y]))])
        return sorted(set(pairs))


def build_aabb_tree(mesh):
    """Deterministic AABB tree over all faces of the mesh."""
    return AabbTree(mesh)


def _refine_coplanar(a, b, eps_rel):
    """Resolve a raw near-coplanar verdict into a final TriTriKind."""
    pts = np.vstack([a, b])
    ext = float((pts.max(axis=0) - pts.min(axis=0)).max())
    eps = eps_rel * max(ext, 1e-30)

    shared = 0
    used = [False, False, False]
    for i in range(3):
        for j in range(3):
            if not used[j] and np.linalg.norm(a[i] - b[j]) <= eps:
                used[j] = True
                shared += 1
                break

    # project onto the dominant plane and run a strict SAT: interiors overlap
    # only when every candidate axis shows more than eps of joint extent
    n = np.cross(a[1] - a[0], a[2] - a[0])
    k = int(np.argmax(np.abs(n)))
    cols = [c for c in range(3) if c != k]
    a2 = a[:, cols]
    b2 = b[:, cols]
    overlap = True
    for tri in (a2, b2):
        for e in range(3):
            edge = tri[(e + 1) % 3] - tri[e]
            axis = np.array([-edge[1], edge[0]])
            norm = np.linalg.norm(axis)
            if norm <= 0:
                continue
            axis /= norm
            pa = a2 @ axis
            pb = b2 @ axis
            if min(pa.max(), pb.max()) - max(pa.min(), pb.min()) <= eps:
                overlap = False
                break
        if not overlap:
            break
    if overlap:
        return TriTriResult(TriTriKind.COPLANAR)
    if shared >= 2:
        return TriTriResult(TriTriKind.SHARED_EDGE)
    if shared == 1:
        return TriTriResult(TriTriKind.SHARED_VERTEX_ONLY)
    return TriTriResult(TriTriKind.DISJOINT)


def tri_tri_intersect(a, b, eps=TRI_EPS):
    """Classify how two triangles meet; see TriTriKind.

    a, b are (3, 3) corner arrays. Adjacent triangles (coinciding corners
    within the scaled tolerance) classify as SHARED_EDGE / SHARED_VERTEX_ONLY;
    a positive-length crossing yields PROPER_SEGMENT with its endpoints.
    Raises MeshError for degenerate input triangles.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    seg = np.empty((2, 3))
    code = K.tri_tri_classify(a, b, eps, seg)
    if code == -1:
        raise MeshError("degenerate triangle passed to tri_tri_intersect")
    if code == K.TT_COPLANAR:
        return _refine_coplanar(a, b, eps)
    if code == K.TT_PROPER:
        return TriTriResult(TriTriKind.PROPER_SEGMENT, seg)
    return TriTriResult(_KIND_BY_CODE[int(code)])


def ray_first_hit(tree, mesh, origin, direction, exclude_face=-1, t_min=T_MIN):
    """Nearest accepted hit along the ray, or None.

    Hits with |t - best| < 1e-12 tie-break to the lowest face index; hits on
    edges and vertices count.
    """
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    face, t = K.ray_first_hit_flat(
        *tree._flat(), mesh.vertices, mesh.faces,
        o[0], o[1], o[2], d[0], d[1], d[2], exclude_face, t_min,
    )
    if face < 0:
        return None
    return RayHit(int(face), float(t), o + t * d)


def ray_escapes(tree, mesh, origin, direction, exclude_face=-1, t_min=T_MIN):
    """True iff the ray reaches infinity: no face besides exclude_face is hit
    at parameter >= t_min."""
    o = np.asarray(origin, dtype=np.float64)
    d = np.asarray(direction, dtype=np.float64)
    return not K.ray_blocked_flat(
        *tree._flat(), mesh.vertices, mesh.faces,
        o[0], o[1], o[2], d[0], d[1], d[2], exclude_face, t_min,
    )
