"""Planar triangulation of a triangle with interior constraint points and segments.

Small-input incremental algorithm: points are inserted one at a time
(interior 3-split, on-edge 2+2 split), then each constraint segment is
recovered by flipping the edges that cross it. Constraint segments that
cross already-recovered constraints are split at the crossing point.
"""

import numpy as np

__all__ = ["TriangulationError", "triangulate_face"]


class TriangulationError(Exception):
    pass


def _orient(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _seg_point_param(a, b, p):
    """(distance to segment line, parameter along a->b)."""
    ab = b - a
    den = ab @ ab
    if den <= 0.0:
        return np.linalg.norm(p - a), 0.0
    t = ((p - a) @ ab) / den
    d = abs(_orient(a, b, p)) / den**0.5
    return d, t


def _proper_cross(a, b, c, d, eps_area):
    """True when segments (a,b) and (c,d) cross strictly inside both."""
    o1 = _orient(a, b, c)
    o2 = _orient(a, b, d)
    o3 = _orient(c, d, a)
    o4 = _orient(c, d, b)
    return (
        (o1 > eps_area and o2 < -eps_area or o1 < -eps_area and o2 > eps_area)
        and (o3 > eps_area and o4 < -eps_area or o3 < -eps_area and o4 > eps_area)
    )


def _cross_point(a, b, c, d):
    r = b - a
    s = d - c
    den = r[0] * s[1] - r[1] * s[0]
    t = ((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / den
    return a + t * r


class _Triangulation:
    def __init__(self, pts, eps):
        self.pts = [np.asarray(p, dtype=np.float64) for p in pts]
        self.eps = eps
        # edge-length scale for area tolerances
        span = max(np.linalg.norm(self.pts[1] - self.pts[0]),
                   np.linalg.norm(self.pts[2] - self.pts[1]),
                   np.linalg.norm(self.pts[0] - self.pts[2]))
        self.eps_area = eps * max(span, eps)
        if _orient(self.pts[0], self.pts[1], self.pts[2]) <= self.eps_area:
            raise TriangulationError("corner triangle is not CCW / degenerate")
        self.tris = [(0, 1, 2)]
        self.constrained = set()

    def _edge_map(self):
        edges = {}
        for ti, (i, j, k) in enumerate(self.tris):
            for e in ((i, j), (j, k), (k, i)):
                edges.setdefault(frozenset(e), []).append(ti)
        return edges

    def _locate(self, p):
        """Containing triangle plus its per-edge signed distances."""
        best = None
        best_d = -np.inf
        for ti, (i, j, k) in enumerate(self.tris):
            a, b, c = self.pts[i], self.pts[j], self.pts[k]
            ds = []
            for u, v in ((a, b), (b, c), (c, a)):
                uv = np.linalg.norm(v - u)
                ds.append(_orient(u, v, p) / max(uv, self.eps))
            m = min(ds)
            if m > best_d:
                best_d = m
                best = (ti, ds)
        if best is None or best_d < -self.eps:
            raise TriangulationError("point lies outside the triangulation")
        return best

    def insert(self, p):
        """Insert point p; returns its vertex id (an existing id if p
        coincides with a vertex within eps)."""
        for vid, q in enumerate(self.pts):
            if np.linalg.norm(p - q) <= self.eps:
                return vid
        ti, ds = self._locate(p)
        pid = len(self.pts)
        self.pts.append(np.asarray(p, dtype=np.float64))
        i, j, k = self.tris[ti]
        on = [e for e, d in enumerate(ds) if d <= self.eps]
        if not on:
            self.tris[ti] = (i, j, pid)
            self.tris.append((j, k, pid))
            self.tris.append((k, i, pid))
            return pid
        # on-edge: split this triangle and the neighbor across that edge
        edge = ((i, j), (j, k), (k, i))[on[0]]
        a, b = edge
        self._split_edge_at(ti, a, b, pid)
        return pid

    def _split_edge_at(self, ti, a, b, pid):
        c = [v for v in self.tris[ti] if v not in (a, b)][0]
        neighbors = [
            t for t in self._edge_map().get(frozenset((a, b)), []) if t != ti
        ]
        self.tris[ti] = (a, pid, c)
        self.tris.append((pid, b, c))
        for tn in neighbors:
            d = [v for v in self.tris[tn] if v not in (a, b)][0]
            self.tris[tn] = (b, pid, d) if self._ccw(b, pid, d) else (pid, b, d)
            new = (pid, a, d) if self._ccw(pid, a, d) else (a, pid, d)
            self.tris.append(new)
        if frozenset((a, b)) in self.constrained:
            self.constrained.discard(frozenset((a, b)))
            self.constrained.add(frozenset((a, pid)))
            self.constrained.add(frozenset((pid, b)))

    def _ccw(self, i, j, k):
        return _orient(self.pts[i], self.pts[j], self.pts[k]) > 0

    def enforce(self, a, b, depth=0):
        """Flip crossing edges until (a, b) is an edge; splits at crossings
        with already-constrained edges."""
        if a == b:
            return
        if depth > 24:
            raise TriangulationError("constraint recursion too deep")
        pa, pb = self.pts[a], self.pts[b]
        guard = 0
        limit = 16 * (len(self.pts) ** 2) + 64
        while frozenset((a, b)) not in self._edge_map():
            guard += 1
            if guard > limit:
                raise TriangulationError("constraint enforcement stalled")
            edges = self._edge_map()
            crossing = []
            for e in edges:
                c, d = tuple(e)
                if a in e or b in e:
                    continue
                if _proper_cross(pa, pb, self.pts[c], self.pts[d], self.eps_area):
                    crossing.append((c, d))
            if not crossing:
                raise TriangulationError("constraint neither present nor crossed")
            crossing.sort()
            flipped = False
            for c, d in crossing:
                if frozenset((c, d)) in self.constrained:
                    x = _cross_point(pa, pb, self.pts[c], self.pts[d])
                    mid = self.insert(x)
                    self.enforce(a, mid, depth + 1)
                    self.enforce(mid, b, depth + 1)
                    return
                if self._flip(c, d):
                    flipped = True
                    break
            if not flipped:
                raise TriangulationError("no crossing edge is flippable")
        self.constrained.add(frozenset((a, b)))

    def _flip(self, c, d):
        adj = self._edge_map().get(frozenset((c, d)), [])
        if len(adj) != 2:
            return False
        t1, t2 = adj
        x = [v for v in self.tris[t1] if v not in (c, d)][0]
        y = [v for v in self.tris[t2] if v not in (c, d)][0]
        px, py = self.pts[x], self.pts[y]
        # the new diagonal must properly cross the old one (convex quad)
        if not _proper_cross(px, py, self.pts[c], self.pts[d], self.eps_area):
            return False
        self.tris[t1] = (x, c, y) if self._ccw(x, c, y) else (c, x, y)
        self.tris[t2] = (x, d, y) if self._ccw(x, d, y) else (d, x, y)
        return True


def triangulate_face(corners, points, segments, eps):
    """Triangulate a CCW corner triangle with constraint points and segments.

    corners  : (3, 2) CCW triangle
    points   : sequence of 2D points (inside or on the triangle)
    segments : index pairs into the combined vertex list (corners get ids
               0..2, points get 3, 4, ... in order)
    eps      : absolute snapping/on-edge tolerance

    Returns (vertices, triangles): the full 2D vertex list (corners, the
    inserted points, plus any crossing splits) and CCW index triples.
    Raises TriangulationError when the input cannot be honored.
    """
    tr = _Triangulation(list(corners), eps)
    ids = [0, 1, 2]
    for p in points:
        ids.append(tr.insert(np.asarray(p, dtype=np.float64)))

    for sa, sb in segments:
        a, b = ids[sa], ids[sb]
        if a == b:
            continue
        # split the constraint at any vertices already lying on it
        chain = [(0.0, a), (1.0, b)]
        pa, pb = tr.pts[a], tr.pts[b]
        for vid in range(len(tr.pts)):
            if vid in (a, b):
                continue
            d, t = _seg_point_param(pa, pb, tr.pts[vid])
            if d <= tr.eps and 0.0 < t < 1.0:
                chain.append((t, vid))
        chain.sort()
        for (_, u), (_, v) in zip(chain, chain[1:]):
            tr.enforce(u, v)

    return [p.copy() for p in tr.pts], list(tr.tris)
