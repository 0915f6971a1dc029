"""Numba kernels: ray/triangle tests, BVH traversal, triangle-pair classification.

Flat-array kernels shared by the spatial queries and the visibility voting.
Everything here is deterministic scalar math; RNG stays outside.
"""

import numpy as np
from numba import njit

# barycentric slack: hits on edges/vertices count as hits
BARY_EPS = 1e-9
# |t| window treated as a tie when picking the nearest hit
T_TIE = 1e-12

# tri_tri_classify codes
TT_DISJOINT = 0
TT_SHARED_VERTEX = 1
TT_SHARED_EDGE = 2
TT_PROPER = 3
TT_COPLANAR = 4


@njit(cache=True, nogil=True, inline="always")
def _cross(ax, ay, az, bx, by, bz):
    return ay * bz - az * by, az * bx - ax * bz, ax * by - ay * bx


@njit(cache=True, nogil=True)
def ray_triangle_t(ox, oy, oz, dx, dy, dz, ax, ay, az, bx, by, bz, cx, cy, cz):
    """Moller-Trumbore; returns hit parameter t, or -1.0 for a miss.

    Edge/vertex grazes count as hits (barycentric slack BARY_EPS); rays
    parallel to the triangle plane miss.
    """
    e1x, e1y, e1z = bx - ax, by - ay, bz - az
    e2x, e2y, e2z = cx - ax, cy - ay, cz - az
    px, py, pz = _cross(dx, dy, dz, e2x, e2y, e2z)
    det = e1x * px + e1y * py + e1z * pz
    l1 = e1x * e1x + e1y * e1y + e1z * e1z
    l2 = e2x * e2x + e2y * e2y + e2z * e2z
    if det * det <= 1e-28 * l1 * l2:
        return -1.0
    inv = 1.0 / det
    tx, ty, tz = ox - ax, oy - ay, oz - az
    u = (tx * px + ty * py + tz * pz) * inv
    if u < -BARY_EPS or u > 1.0 + BARY_EPS:
        return -1.0
    qx, qy, qz = _cross(tx, ty, tz, e1x, e1y, e1z)
    v = (dx * qx + dy * qy + dz * qz) * inv
    if v < -BARY_EPS or u + v > 1.0 + BARY_EPS:
        return -1.0
    return (e2x * qx + e2y * qy + e2z * qz) * inv


@njit(cache=True, nogil=True, inline="always")
def _slab_hit(bmin, bmax, ox, oy, oz, dx, dy, dz, t_lo, t_hi):
    """Ray vs box over [t_lo, t_hi]; returns entry t or +inf on miss."""
    lo = t_lo
    hi = t_hi
    for axis in range(3):
        if axis == 0:
            o, d = ox, dx
        elif axis == 1:
            o, d = oy, dy
        else:
            o, d = oz, dz
        if d > 1e-300 or d < -1e-300:
            t1 = (bmin[axis] - o) / d
            t2 = (bmax[axis] - o) / d
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > lo:
                lo = t1
            if t2 < hi:
                hi = t2
            if lo > hi:
                return np.inf
        elif o < bmin[axis] or o > bmax[axis]:
            return np.inf
    return lo


@njit(cache=True, nogil=True)
def ray_first_hit_flat(
    nmin, nmax, left, right, start, count, prim,
    verts, faces, ox, oy, oz, dx, dy, dz, exclude, t_min,
):
    """Nearest accepted hit along the ray; (face, t) or (-1, inf).

    Ties within T_TIE go to the lowest face index.
    """
    best_t = np.inf
    best_f = -1
    stack = np.empty(128, dtype=np.int64)
    top = 0
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        entry = _slab_hit(nmin[node], nmax[node], ox, oy, oz, dx, dy, dz, 0.0, np.inf)
        if entry > best_t + T_TIE:
            continue
        if left[node] < 0:
            for k in range(start[node], start[node] + count[node]):
                f = prim[k]
                if f == exclude:
                    continue
                a = faces[f, 0]
                b = faces[f, 1]
                c = faces[f, 2]
                t = ray_triangle_t(
                    ox, oy, oz, dx, dy, dz,
                    verts[a, 0], verts[a, 1], verts[a, 2],
                    verts[b, 0], verts[b, 1], verts[b, 2],
                    verts[c, 0], verts[c, 1], verts[c, 2],
                )
                if t < t_min:
                    continue
                if t < best_t - T_TIE or (t <= best_t + T_TIE and f < best_f):
                    if t < best_t:
                        best_t = t
                    best_f = f
        else:
            stack[top] = left[node]
            top += 1
            stack[top] = right[node]
            top += 1
    if best_f == -1:
        return -1, np.inf
    return best_f, best_t


@njit(cache=True, nogil=True)
def ray_blocked_flat(
    nmin, nmax, left, right, start, count, prim,
    verts, faces, ox, oy, oz, dx, dy, dz, exclude, t_min,
):
    """True as soon as any face other than `exclude` is hit at t >= t_min."""
    stack = np.empty(128, dtype=np.int64)
    stack[0] = 0
    top = 1
    while top > 0:
        top -= 1
        node = stack[top]
        entry = _slab_hit(nmin[node], nmax[node], ox, oy, oz, dx, dy, dz, 0.0, np.inf)
        if entry == np.inf:
            continue
        if left[node] < 0:
            for k in range(start[node], start[node] + count[node]):
                f = prim[k]
                if f == exclude:
                    continue
                a = faces[f, 0]
                b = faces[f, 1]
                c = faces[f, 2]
                t = ray_triangle_t(
                    ox, oy, oz, dx, dy, dz,
                    verts[a, 0], verts[a, 1], verts[a, 2],
                    verts[b, 0], verts[b, 1], verts[b, 2],
                    verts[c, 0], verts[c, 1], verts[c, 2],
                )
                if t >= t_min:
                    return True
        else:
            stack[top] = left[node]
            top += 1
            stack[top] = right[node]
            top += 1
    return False


@njit(cache=True, nogil=True)
def count_escapes_flat(
    nmin, nmax, left, right, start, count, prim,
    verts, faces, origins, dirs, exclude, t_min,
):
    """Number of rays in the batch that hit nothing besides `exclude`."""
    escaped = 0
    for r in range(origins.shape[0]):
        if not ray_blocked_flat(
            nmin, nmax, left, right, start, count, prim, verts, faces,
            origins[r, 0], origins[r, 1], origins[r, 2],
            dirs[r, 0], dirs[r, 1], dirs[r, 2], exclude, t_min,
        ):
            escaped += 1
    return escaped


@njit(cache=True, nogil=True)
def ray_first_hit_brute(verts, faces, ox, oy, oz, dx, dy, dz, exclude, t_min):
    """Linear scan over all faces; same acceptance and tie rules as the tree."""
    best_t = np.inf
    best_f = -1
    for f in range(faces.shape[0]):
        if f == exclude:
            continue
        a = faces[f, 0]
        b = faces[f, 1]
        c = faces[f, 2]
        t = ray_triangle_t(
            ox, oy, oz, dx, dy, dz,
            verts[a, 0], verts[a, 1], verts[a, 2],
            verts[b, 0], verts[b, 1], verts[b, 2],
            verts[c, 0], verts[c, 1], verts[c, 2],
        )
        if t < t_min:
            continue
        if t < best_t - T_TIE or (t <= best_t + T_TIE and f < best_f):
            if t < best_t:
                best_t = t
            best_f = f
    if best_f == -1:
        return -1, np.inf
    return best_f, best_t


# ---------------------------------------------------------------------------
# triangle-triangle classification


@njit(cache=True, nogil=True)
def _plane_interval(tri, dist, eps, pts, params, dnx, dny, dnz):
    """Points where `tri` meets the other triangle's plane, as 3D points plus
    their parameters along direction (dnx,dny,dnz). Returns the point count."""
    n = 0
    # vertices lying on the plane
    for i in range(3):
        if abs(dist[i]) <= eps:
            pts[n, 0] = tri[i, 0]
            pts[n, 1] = tri[i, 1]
            pts[n, 2] = tri[i, 2]
            n += 1
    # edges whose endpoints straddle the plane
    for i in range(3):
        j = (i + 1) % 3
        di = dist[i]
        dj = dist[j]
        if (di > eps and dj < -eps) or (di < -eps and dj > eps):
            w = di / (di - dj)
            pts[n, 0] = tri[i, 0] + w * (tri[j, 0] - tri[i, 0])
            pts[n, 1] = tri[i, 1] + w * (tri[j, 1] - tri[i, 1])
            pts[n, 2] = tri[i, 2] + w * (tri[j, 2] - tri[i, 2])
            n += 1
    for i in range(n):
        params[i] = pts[i, 0] * dnx + pts[i, 1] * dny + pts[i, 2] * dnz
    return n


@njit(cache=True, nogil=True)
def tri_tri_classify(a, b, eps_rel, out_seg):
    """Classify the intersection of triangles a and b, each shaped (3, 3).

    Returns a TT_* code; for TT_PROPER the segment endpoints are written to
    out_seg (2, 3). TT_COPLANAR is a raw verdict: near-coplanar supports,
    overlap not yet established (the caller refines it in 2D).
    """
    # scale-aware tolerance from the pair's joint extent
    ext = 0.0
    for k in range(3):
        lo = a[0, k]
        hi = a[0, k]
        for i in range(3):
            if a[i, k] < lo:
                lo = a[i, k]
            if a[i, k] > hi:
                hi = a[i, k]
            if b[i, k] < lo:
                lo = b[i, k]
            if b[i, k] > hi:
                hi = b[i, k]
        if hi - lo > ext:
            ext = hi - lo
    eps = eps_rel * max(ext, 1e-30)

    n1x, n1y, n1z = _cross(
        a[1, 0] - a[0, 0], a[1, 1] - a[0, 1], a[1, 2] - a[0, 2],
        a[2, 0] - a[0, 0], a[2, 1] - a[0, 1], a[2, 2] - a[0, 2],
    )
    l1 = (n1x * n1x + n1y * n1y + n1z * n1z) ** 0.5
    n2x, n2y, n2z = _cross(
        b[1, 0] - b[0, 0], b[1, 1] - b[0, 1], b[1, 2] - b[0, 2],
        b[2, 0] - b[0, 0], b[2, 1] - b[0, 1], b[2, 2] - b[0, 2],
    )
    l2 = (n2x * n2x + n2y * n2y + n2z * n2z) ** 0.5
    if l1 <= 0.0 or l2 <= 0.0:
        return -1  # degenerate input
    n1x, n1y, n1z = n1x / l1, n1y / l1, n1z / l1
    n2x, n2y, n2z = n2x / l2, n2y / l2, n2z / l2

    da = np.empty(3)
    db = np.empty(3)
    for i in range(3):
        db[i] = (b[i, 0] - a[0, 0]) * n1x + (b[i, 1] - a[0, 1]) * n1y + (b[i, 2] - a[0, 2]) * n1z
        da[i] = (a[i, 0] - b[0, 0]) * n2x + (a[i, 1] - b[0, 1]) * n2y + (a[i, 2] - b[0, 2]) * n2z
    if (da[0] > eps and da[1] > eps and da[2] > eps) or (
        da[0] < -eps and da[1] < -eps and da[2] < -eps
    ):
        return TT_DISJOINT
    if (db[0] > eps and db[1] > eps and db[2] > eps) or (
        db[0] < -eps and db[1] < -eps and db[2] < -eps
    ):
        return TT_DISJOINT

    coplanar = True
    for i in range(3):
        if abs(da[i]) > eps or abs(db[i]) > eps:
            coplanar = False
    if coplanar:
        return TT_COPLANAR

    # shared corners (coordinate coincidence within eps)
    shared = 0
    used = np.zeros(3, dtype=np.int64)
    for i in range(3):
        for j in range(3):
            if used[j] == 1:
                continue
            dx = a[i, 0] - b[j, 0]
            dy = a[i, 1] - b[j, 1]
            dz = a[i, 2] - b[j, 2]
            if dx * dx + dy * dy + dz * dz <= eps * eps:
                used[j] = 1
                shared += 1
                break
    if shared >= 2:
        # non-coplanar triangles sharing an edge meet exactly at that edge
        return TT_SHARED_EDGE

    # direction of the plane-plane intersection line
    dlx, dly, dlz = _cross(n1x, n1y, n1z, n2x, n2y, n2z)
    dl = (dlx * dlx + dly * dly + dlz * dlz) ** 0.5
    if dl <= 1e-12:
        return TT_COPLANAR
    dlx, dly, dlz = dlx / dl, dly / dl, dlz / dl

    pa = np.empty((3, 3))
    sa = np.empty(3)
    na = _plane_interval(a, da, eps, pa, sa, dlx, dly, dlz)
    pb = np.empty((3, 3))
    sb = np.empty(3)
    nb = _plane_interval(b, db, eps, pb, sb, dlx, dly, dlz)
    if na == 0 or nb == 0:
        return TT_SHARED_VERTEX if shared == 1 else TT_DISJOINT

    a_lo, a_hi = sa[0], sa[0]
    ia_lo = ia_hi = 0
    for i in range(1, na):
        if sa[i] < a_lo:
            a_lo = sa[i]
            ia_lo = i
        if sa[i] > a_hi:
            a_hi = sa[i]
            ia_hi = i
    b_lo, b_hi = sb[0], sb[0]
    for i in range(1, nb):
        if sb[i] < b_lo:
            b_lo = sb[i]
        if sb[i] > b_hi:
            b_hi = sb[i]

    lo = max(a_lo, b_lo)
    hi = min(a_hi, b_hi)
    if hi - lo <= eps:
        return TT_SHARED_VERTEX if shared == 1 else TT_DISJOINT

    # reconstruct 3D endpoints on A's chord
    span = a_hi - a_lo
    for e in range(2):
        s = lo if e == 0 else hi
        if span <= 0.0:
            w = 0.0
        else:
            w = (s - a_lo) / span
        for k in range(3):
            out_seg[e, k] = pa[ia_lo, k] + w * (pa[ia_hi, k] - pa[ia_lo, k])
    return TT_PROPER


@njit(cache=True, nogil=True)
def boxes_overlap(amin, amax, bmin, bmax, margin):
    for k in range(3):
        if amin[k] - margin > bmax[k] or bmin[k] - margin > amax[k]:
            return False
    return True
