"""meshmend: eliminate the five classic triangle-mesh deficiencies.

Duplicate elements, degenerate faces, isolated vertices, self-intersections
and inner faces, via topology cleanup, plane-constrained remeshing, quadric
simplification and ray-cast visibility voting.
"""

from .cleanup import (
    REMOVED,
    VertexRemap,
    remove_degenerate_faces,
    remove_duplicate_faces,
    remove_duplicate_vertices,
    remove_isolated_vertices,
)
from .mesh import (
    DegenerateExtentError,
    Mesh,
    MeshError,
    MeshParseError,
    compute_face_areas,
    load_mesh,
    normalize_unit_sphere,
    save_mesh,
)
from .pipeline import (
    AuditReport,
    InjectionSpec,
    PipelineConfig,
    RepairReport,
    StageReport,
    audit_deficiencies,
    inject_deficiencies,
    run_pipeline,
    slice_export,
)
from .remesh import (
    RemeshResult,
    detect_self_intersections,
    remesh_self_intersections,
    remesh_until_clean,
)
from .simplify import simplify_to
from .spatial import (
    AabbTree,
    RayHit,
    TriTriKind,
    TriTriResult,
    build_aabb_tree,
    ray_escapes,
    ray_first_hit,
    tri_tri_intersect,
)
from .visibility import (
    RaySamplingPlan,
    VisibilityTally,
    correct_orientation,
    ray_budgets,
    remove_inner_faces,
    sample_face_rays,
)

__version__ = "0.1.0"

__all__ = [
    "Mesh", "MeshError", "MeshParseError", "DegenerateExtentError",
    "load_mesh", "save_mesh", "normalize_unit_sphere", "compute_face_areas",
    "REMOVED", "VertexRemap",
    "remove_duplicate_vertices", "remove_duplicate_faces",
    "remove_degenerate_faces", "remove_isolated_vertices",
    "AabbTree", "build_aabb_tree", "TriTriKind", "TriTriResult", "RayHit",
    "tri_tri_intersect", "ray_first_hit", "ray_escapes",
    "RemeshResult", "detect_self_intersections", "remesh_self_intersections",
    "remesh_until_clean",
    "simplify_to",
    "RaySamplingPlan", "VisibilityTally", "ray_budgets", "sample_face_rays",
    "correct_orientation", "remove_inner_faces",
    "PipelineConfig", "StageReport", "RepairReport", "run_pipeline",
    "AuditReport", "audit_deficiencies", "InjectionSpec", "inject_deficiencies",
    "slice_export",
]
