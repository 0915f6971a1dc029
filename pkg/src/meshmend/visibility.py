"""Ray-cast visibility voting: per-face escape tallies drive orientation
flips and inner-face deletion.

Every face gets its own RNG stream keyed by (seed, face index), so tallies
are identical across runs and across worker counts.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .cleanup import remove_isolated_vertices
from .mesh import Mesh, MeshError, compute_face_areas
from .spatial import T_MIN, build_aabb_tree

__all__ = [
    "RaySamplingPlan",
    "VisibilityTally",
    "ray_budgets",
    "sample_face_rays",
    "correct_orientation",
    "remove_inner_faces",
    "escape_tallies",
]

_SIN_GRAZE = np.sin(np.deg2rad(1.0))  # reject directions within 1 deg of the face plane


@dataclass(frozen=True)
class RaySamplingPlan:
    """Ray budgets and thresholds for the visibility passes.

    n_max          : desired total rays, shared across faces by area
    n_min          : minimum rays per face
    inner_threshold: escape fraction below which a face counts as inner
    origin_offset  : origin lift off the face along +-normal (unit-sphere scale)
    seed           : base RNG seed; streams are keyed (seed, face index)
    """

    n_max: int = 200_000
    n_min: int = 100
    inner_threshold: float = 0.05
    origin_offset: float = 1e-5
    seed: int = 0

    def __post_init__(self):
        if self.n_min < 1:
            raise ValueError("n_min must be >= 1")
        if not 0.0 < self.inner_threshold < 1.0:
            raise ValueError("inner_threshold must be in (0, 1)")
        if self.origin_offset <= 0.0:
            raise ValueError("origin_offset must be > 0")


@dataclass
class VisibilityTally:
    """Per-face ray budgets and escape counters."""

    budgets: np.ndarray
    c_front: np.ndarray | None = None
    c_back: np.ndarray | None = None
    c_inf: np.ndarray | None = None


def ray_budgets(areas, total_area, plan):
    """Per-face budgets n_i = max(round(s_i / S * n_max), n_min), half-up."""
    if total_area <= 0.0:
        raise MeshError("total surface area is zero")
    shares = np.asarray(areas, dtype=np.float64) / total_area
    n = np.floor(shares * plan.n_max + 0.5).astype(np.int64)
    return np.maximum(n, plan.n_min)


def _face_rng(plan, face):
    return np.random.default_rng([plan.seed & 0xFFFFFFFFFFFFFFFF, face])


def _hemisphere(rng, normal, n):
    """Uniform unit directions with d . normal > sin(1 deg)."""
    out = np.empty((n, 3))
    pending = np.arange(n)
    while pending.size:
        g = rng.standard_normal((pending.size, 3))
        lens = np.linalg.norm(g, axis=1)
        lens[lens == 0] = 1.0
        g /= lens[:, None]
        dots = g @ normal
        g[dots < 0] *= -1.0
        ok = np.abs(dots) > _SIN_GRAZE
        out[pending[ok]] = g[ok]
        pending = pending[~ok]
    return out


def sample_face_rays(mesh, face, n, rng, origin_offset=1e-5):
    """n mirrored front/back ray pairs for one face.

    Origins are uniform barycentric points lifted origin_offset along the
    +normal (front) and -normal (back); back directions mirror the front
    hemisphere draws. Returns (origins, directions, sides) with the n front
    rows first, then the n back rows; sides is +1 / -1.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b, c = mesh.vertices[mesh.faces[face]]
    normal = np.cross(b - a, c - a)
    ln = np.linalg.norm(normal)
    if ln <= 0:
        raise MeshError(f"face {face} is degenerate")
    normal = normal / ln

    uv = rng.random((n, 2))
    over = uv.sum(axis=1) > 1.0
    uv[over] = 1.0 - uv[over]
    base = a + uv[:, :1] * (b - a) + uv[:, 1:] * (c - a)

    d_front = _hemisphere(rng, normal, n)
    origins = np.vstack([base + origin_offset * normal, base - origin_offset * normal])
    dirs = np.vstack([d_front, -d_front])
    sides = np.concatenate([np.ones(n, dtype=np.int64), -np.ones(n, dtype=np.int64)])
    return origins, dirs, sides


def _tally_range(mesh, tree, plan, budgets, lo, hi, front, back, c_front, c_back, t_min):
    flat = tree._flat()
    verts = mesh.vertices
    faces = mesh.faces
    for f in range(lo, hi):
        n = int(budgets[f])
        rng = _face_rng(plan, f)
        origins, dirs, _ = sample_face_rays(mesh, f, n, rng, plan.origin_offset)
        if front:
            c_front[f] = K.count_escapes_flat(
                *flat, verts, faces, origins[:n], dirs[:n], f, t_min
            )
        if back:
            c_back[f] = K.count_escapes_flat(
                *flat, verts, faces, origins[n:], dirs[n:], f, t_min
            )


def escape_tallies(mesh, plan, sides="both", workers=1, t_min=T_MIN, tree=None):
    """Escape counts per face; sides is "front", "back" or "both".

    The per-face streams make the result independent of `workers`.
    """
    if mesh.n_faces == 0:
        empty = np.zeros(0, dtype=np.int64)
        return VisibilityTally(empty, empty.copy(), empty.copy(), empty.copy())
    areas, total = compute_face_areas(mesh)
    if (areas <= 0).any():
        raise MeshError("degenerate faces present; run the degenerate-face pass first")
    budgets = ray_budgets(areas, total, plan)
    if tree is None:
        tree = build_aabb_tree(mesh)

    front = sides in ("front", "both")
    back = sides in ("back", "both")
    m = mesh.n_faces
    c_front = np.zeros(m, dtype=np.int64) if front else None
    c_back = np.zeros(m, dtype=np.int64) if back else None

    if workers <= 1:
        _tally_range(mesh, tree, plan, budgets, 0, m, front, back, c_front, c_back, t_min)
    else:
        bounds = np.linspace(0, m, workers + 1).astype(int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(
                    _tally_range, mesh, tree, plan, budgets,
                    int(bounds[w]), int(bounds[w + 1]),
                    front, back, c_front, c_back, t_min,
                )
                for w in range(workers)
            ]
            for fut in futures:
                fut.result()
    return VisibilityTally(budgets, c_front, c_back, None)


def correct_orientation(mesh, plan, workers=1, t_min=T_MIN):
    """Flip faces whose front side escapes less often than their back side.

    For each face, n_i mirrored ray pairs are cast from both sides; the face
    winding (p1, p2, p3) becomes (p1, p3, p2) iff c_front < c_back (strict,
    so ties stay put). Vertices are untouched. Returns (mesh, flipped_count).
    """
    if mesh.n_faces == 0:
        return mesh.copy(), 0
    tally = escape_tallies(mesh, plan, "both", workers, t_min)
    flip = tally.c_front < tally.c_back
    faces = mesh.faces.copy()
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return Mesh(mesh.vertices.copy(), faces, validate=False), int(flip.sum())


def inner_face_mask(mesh, plan, workers=1, t_min=T_MIN):
    """(mask, tally): mask marks faces with c_inf < inner_threshold * n_i."""
    tally = escape_tallies(mesh, plan, "front", workers, t_min)
    tally.c_inf = tally.c_front
    tally.c_front = None
    mask = tally.c_inf < plan.inner_threshold * tally.budgets
    return mask, tally


def remove_inner_faces(mesh, plan, workers=1, t_min=T_MIN):
    """Delete faces invisible from outside, then drop their orphaned vertices.

    Casts n_i rays from each face's +normal side (orientation must already be
    corrected); faces whose escape count stays below inner_threshold * n_i
    are removed. Returns (mesh, removed_face_count).
    """
    if mesh.n_faces == 0:
        return mesh.copy(), 0
    mask, _ = inner_face_mask(mesh, plan, workers, t_min)
    kept = Mesh(mesh.vertices.copy(), mesh.faces[~mask], validate=False)
    out, _, _ = remove_isolated_vertices(kept)
    return out, int(mask.sum())
