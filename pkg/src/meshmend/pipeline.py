"""End-to-end repair pipeline, deficiency audit, fixture injection, slicing."""

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .cleanup import (
    remove_degenerate_faces,
    remove_duplicate_faces,
    remove_duplicate_vertices,
    remove_isolated_vertices,
)
from .mesh import Mesh, compute_face_areas, normalize_unit_sphere, save_mesh
from .remesh import SNAP_EPS, detect_self_intersections, remesh_self_intersections, _classified_pairs
from .simplify import simplify_to
from .spatial import TRI_EPS
from .visibility import RaySamplingPlan, inner_face_mask, correct_orientation, remove_inner_faces

__all__ = [
    "STAGE_NAMES",
    "PipelineConfig",
    "StageReport",
    "RepairReport",
    "run_pipeline",
    "AuditReport",
    "audit_deficiencies",
    "InjectionSpec",
    "inject_deficiencies",
    "slice_export",
]

STAGE_NAMES = (
    "dedup",
    "remove_degenerate",
    "remove_isolated",
    "normalize",
    "remesh",
    "dedup_after_remesh",
    "simplify",
    "correct_orientation",
    "remove_inner",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for run_pipeline; defaults match the CLI defaults.

    target_vertices <= 0 skips simplification. skip_stages lists stage names
    (see STAGE_NAMES) to disable; whatever remains always runs in the fixed
    pipeline order.
    """

    target_vertices: int = 10_000
    dedup_tolerance: float = 0.0
    degeneracy_epsilon: float = 1e-12
    plan: RaySamplingPlan = field(default_factory=RaySamplingPlan)
    samples_per_segment: int = 2
    intersection_eps: float = TRI_EPS
    remesh_snap: float = SNAP_EPS
    remesh_dedup_tolerance: float = SNAP_EPS
    remesh_max_passes: int = 3
    workers: int = 1
    skip_stages: tuple = ()

    def __post_init__(self):
        unknown = set(self.skip_stages) - set(STAGE_NAMES)
        if unknown:
            raise ValueError(f"unknown stage names: {sorted(unknown)}")


@dataclass
class StageReport:
    stage: str
    vertices_before: int
    vertices_after: int
    faces_before: int
    faces_after: int
    removed_or_flipped: int
    ms: float


@dataclass
class RepairReport:
    stages: list = field(default_factory=list)
    partial_failure: bool = False
    failed_stage: str | None = None
    error: str | None = None
    residual_self_intersections: int = 0
    remesh_failed_faces: list = field(default_factory=list)

    def to_dicts(self):
        """The report's wire format: one dict per executed stage."""
        return [asdict(s) for s in self.stages]

    def to_json(self, indent=2):
        return json.dumps(self.to_dicts(), indent=indent)


def _run_stage(name, mesh, config):
    """Execute one stage; returns (mesh, removed_or_flipped, remesh_failures)."""
    if name == "dedup" or name == "dedup_after_remesh":
        tol = config.dedup_tolerance
        if name == "dedup_after_remesh":
            tol = max(tol, config.remesh_dedup_tolerance)
        m, _, nv = remove_duplicate_vertices(mesh, tol)
        m, nf = remove_duplicate_faces(m)
        return m, nv + nf, []
    if name == "remove_degenerate":
        m, n = remove_degenerate_faces(mesh, config.degeneracy_epsilon)
        return m, n, []
    if name == "remove_isolated":
        m, _, n = remove_isolated_vertices(mesh)
        return m, n, []
    if name == "normalize":
        return normalize_unit_sphere(mesh), 0, []
    if name == "remesh":
        if mesh.n_faces == 0:
            return mesh, 0, []
        res = remesh_self_intersections(
            mesh, config.samples_per_segment, config.intersection_eps, config.remesh_snap
        )
        return res.mesh, res.remeshed_face_count, list(res.failed_faces)
    if name == "simplify":
        m = simplify_to(mesh, config.target_vertices)
        return m, mesh.n_vertices - m.n_vertices, []
    if name == "correct_orientation":
        m, n = correct_orientation(mesh, config.plan, config.workers)
        return m, n, []
    if name == "remove_inner":
        m, n = remove_inner_faces(mesh, config.plan, config.workers)
        return m, n, []
    raise ValueError(f"unknown stage {name!r}")


def run_pipeline(mesh, config=None):
    """Run the full repair pipeline and return (mesh, RepairReport).

    Order: dedup, degenerate, isolated, normalize, remesh, dedup again,
    simplify, orientation correction, inner-face removal. If remeshing plus
    dedup leaves proper self-intersections, the remesh/dedup pair reruns up
    to remesh_max_passes times (extra report entries, same names). A stage
    error aborts the remainder; the mesh from the last good stage is returned
    with partial_failure set.
    """
    config = config or PipelineConfig()
    skip = set(config.skip_stages)
    if config.target_vertices <= 0:
        skip.add("simplify")

    queue = [s for s in STAGE_NAMES if s not in skip]
    report = RepairReport()
    current = mesh
    remesh_passes = 0
    i = 0
    while i < len(queue):
        name = queue[i]
        t0 = time.perf_counter()
        try:
            nxt, removed, failures = _run_stage(name, current, config)
        except Exception as exc:  # noqa: BLE001 - partial-failure contract
            report.partial_failure = True
            report.failed_stage = name
            report.error = f"{type(exc).__name__}: {exc}"
            break
        ms = (time.perf_counter() - t0) * 1000.0
        report.stages.append(
            StageReport(
                name, current.n_vertices, nxt.n_vertices,
                current.n_faces, nxt.n_faces, int(removed), ms,
            )
        )
        report.remesh_failed_faces.extend(failures)
        current = nxt
        if name == "dedup_after_remesh" and "remesh" not in skip and current.n_faces:
            remesh_passes += 1
            if remesh_passes < config.remesh_max_passes:
                proper, _ = _classified_pairs(current, config.intersection_eps)
                if proper:
                    queue[i + 1: i + 1] = ["remesh", "dedup_after_remesh"]
            else:
                proper, _ = _classified_pairs(current, config.intersection_eps)
                report.residual_self_intersections = len(proper)
        i += 1
    return current, report


# ---------------------------------------------------------------------------
# audit


@dataclass
class AuditReport:
    duplicate_vertices: int
    duplicate_faces: int
    degenerate_faces: int
    isolated_vertices: int
    self_intersecting_pairs: int
    inner_faces: int | None = None

    def to_dict(self):
        return asdict(self)

    def clean(self):
        """True when every deterministic deficiency count is zero."""
        return (
            self.duplicate_vertices == 0
            and self.duplicate_faces == 0
            and self.degenerate_faces == 0
            and self.isolated_vertices == 0
            and self.self_intersecting_pairs == 0
        )


def audit_deficiencies(mesh, config=None, include_inner=True):
    """Count each deficiency class as defined, without modifying the mesh.

    The inner-face count re-runs the visibility vote under config.plan (same
    seed as the pipeline would use) and is skipped for meshes with degenerate
    faces, where ray budgets are undefined.
    """
    config = config or PipelineConfig()
    _, _, dup_v = remove_duplicate_vertices(mesh, config.dedup_tolerance)
    _, dup_f = remove_duplicate_faces(mesh)
    _, deg = remove_degenerate_faces(mesh, config.degeneracy_epsilon)
    _, _, iso = remove_isolated_vertices(mesh)
    pairs = detect_self_intersections(mesh, config.intersection_eps) if mesh.n_faces else []

    inner = None
    if include_inner and mesh.n_faces:
        areas, _ = compute_face_areas(mesh)
        if (areas > 0).all():
            mask, _ = inner_face_mask(mesh, config.plan, config.workers)
            inner = int(mask.sum())
    elif include_inner:
        inner = 0
    return AuditReport(dup_v, dup_f, deg, iso, len(pairs), inner)


# ---------------------------------------------------------------------------
# deficiency injection (test corpus construction)


@dataclass(frozen=True)
class InjectionSpec:
    """How many of each deficiency to graft onto a clean closed mesh."""

    duplicate_vertices: int = 0
    duplicate_faces: int = 0
    degenerate_faces: int = 0
    isolated_vertices: int = 0
    crossing_pairs: int = 0
    flipped_faces: int = 0
    inner_shell_scale: float | None = None

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _rotation_from(rng):
    """Deterministic proper rotation from the stream."""
    q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


_CROSS_A = np.array([[-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, 0.0]])
_CROSS_B = np.array([[0.0, -1.0, -1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0]])


def inject_deficiencies(mesh, spec, seed=0):
    """Graft the requested deficiencies onto a clean closed mesh.

    Returns (mesh, ground_truth) where ground_truth records exactly what was
    injected: per-class vertex/face indices into the returned mesh. Crossing
    triangle pairs and isolated vertices are placed outside the surface;
    the inner shell is a scaled copy of the input surface about its box
    center. Raises ValueError when the spec exceeds the mesh size.
    """
    if spec.duplicate_vertices > mesh.n_vertices:
        raise ValueError("more duplicate vertices requested than vertices exist")
    if spec.duplicate_faces > mesh.n_faces or spec.flipped_faces > mesh.n_faces:
        raise ValueError("more faces requested than the mesh has")
    if mesh.n_faces == 0 and (spec.degenerate_faces or spec.inner_shell_scale):
        raise ValueError("mesh has no faces to build on")

    rng = np.random.default_rng(seed)
    verts = [v for v in mesh.vertices]
    faces = [tuple(f) for f in mesh.faces]
    lo, hi = mesh.bounds()
    center = 0.5 * (lo + hi)
    diag = float(np.linalg.norm(hi - lo))
    truth = {
        "flipped_faces": [],
        "duplicate_vertices": [],
        "duplicate_faces": [],
        "degenerate_faces": [],
        "degenerate_extra_vertices": [],
        "isolated_vertices": [],
        "crossing_faces": [],
        "inner_shell_faces": [],
    }

    if spec.flipped_faces:
        picks = np.sort(rng.choice(len(faces), size=spec.flipped_faces, replace=False))
        for f in picks:
            a, b, c = faces[f]
            faces[f] = (a, c, b)
        truth["flipped_faces"] = [int(f) for f in picks]

    if spec.duplicate_vertices:
        picks = np.sort(rng.choice(len(verts), size=spec.duplicate_vertices, replace=False))
        for v in picks:
            copy_id = len(verts)
            verts.append(verts[int(v)].copy())
            for fi, tri in enumerate(faces):
                if int(v) in tri:
                    slot = tri.index(int(v))
                    faces[fi] = tuple(
                        copy_id if k == slot else tri[k] for k in range(3)
                    )
                    break
            truth["duplicate_vertices"].append((int(v), copy_id))

    if spec.duplicate_faces:
        picks = np.sort(rng.choice(mesh.n_faces, size=spec.duplicate_faces, replace=False))
        for f in picks:
            a, b, c = faces[int(f)]
            truth["duplicate_faces"].append((int(f), len(faces)))
            faces.append((b, c, a))

    if spec.degenerate_faces:
        picks = rng.choice(mesh.n_faces, size=spec.degenerate_faces, replace=True)
        for f in picks:
            a, b, _ = faces[int(f)]
            mid = len(verts)
            verts.append(0.5 * (verts[a] + verts[b]))
            truth["degenerate_extra_vertices"].append(mid)
            truth["degenerate_faces"].append(len(faces))
            faces.append((a, b, mid))

    if spec.isolated_vertices:
        for _ in range(spec.isolated_vertices):
            p = center + (rng.random(3) - 0.5) * 1.25 * max(diag, 1.0)
            truth["isolated_vertices"].append(len(verts))
            verts.append(p)

    if spec.crossing_pairs:
        golden = np.pi * (3.0 - np.sqrt(5.0))
        for t in range(spec.crossing_pairs):
            z = 1.0 - 2.0 * (t + 0.5) / spec.crossing_pairs
            r = np.sqrt(max(0.0, 1.0 - z * z))
            ang = golden * t
            direction = np.array([r * np.cos(ang), r * np.sin(ang), z])
            where = center + direction * (0.9 * max(diag, 1.0))
            rot = _rotation_from(rng)
            size = 0.08 * max(diag, 1.0)
            tri_a = (_CROSS_A * size) @ rot.T + where
            tri_b = (_CROSS_B * size) @ rot.T + where
            base = len(verts)
            verts.extend([p for p in tri_a] + [p for p in tri_b])
            fa = len(faces)
            faces.append((base, base + 1, base + 2))
            faces.append((base + 3, base + 4, base + 5))
            truth["crossing_faces"].append((fa, fa + 1))

    if spec.inner_shell_scale:
        scale = float(spec.inner_shell_scale)
        if not 0.0 < scale < 1.0:
            raise ValueError("inner_shell_scale must be in (0, 1)")
        base = len(verts)
        fa = len(faces)
        for v in mesh.vertices:
            verts.append(center + scale * (v - center))
        for a, b, c in mesh.faces:
            faces.append((base + int(a), base + int(b), base + int(c)))
        truth["inner_shell_faces"] = list(range(fa, len(faces)))

    out = Mesh(np.asarray(verts), np.asarray(faces, dtype=np.int64))
    return out, truth


def slice_export(mesh, plane_point, plane_normal, path, format=None):
    """Write the sub-mesh of faces whose centroid lies on the plane's
    negative side; used for before/after inspection of interior structure.

    Returns the exported sub-mesh.
    """
    p = np.asarray(plane_point, dtype=np.float64)
    n = np.asarray(plane_normal, dtype=np.float64)
    if mesh.n_faces:
        centroids = mesh.triangles().mean(axis=1)
        keep = (centroids - p) @ n < 0
        sub = Mesh(mesh.vertices.copy(), mesh.faces[keep], validate=False)
    else:
        sub = mesh.copy()
    sub, _, _ = remove_isolated_vertices(sub)
    save_mesh(sub, path, format)
    return sub
