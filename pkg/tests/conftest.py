import numpy as np
import pytest

from meshmend import (
    Mesh,
    RaySamplingPlan,
    build_aabb_tree,
    ray_first_hit,
    tri_tri_intersect,
)
from meshmend.primitives import crossing_triangles, icosahedron, unit_cube


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile (or load from cache) every numba kernel before any timed test."""
    cube = unit_cube()
    tree = build_aabb_tree(cube)
    ray_first_hit(tree, cube, np.array([0.5, 0.5, 3.0]), np.array([0.0, 0.0, -1.0]))
    tri = crossing_triangles().triangles()
    tri_tri_intersect(tri[0], tri[1])
    from meshmend._kernels import ray_first_hit_brute, count_escapes_flat

    ray_first_hit_brute(
        cube.vertices, cube.faces, 0.5, 0.5, 3.0, 0.0, 0.0, -1.0, -1, 1e-6
    )
    count_escapes_flat(
        *tree._flat(), cube.vertices, cube.faces,
        np.array([[0.5, 0.5, 3.0]]), np.array([[0.0, 0.0, 1.0]]), -1, 1e-6,
    )


@pytest.fixture
def cube():
    return unit_cube()


@pytest.fixture
def ico():
    return icosahedron()


@pytest.fixture
def small_plan():
    return RaySamplingPlan(n_max=2_000, n_min=100, seed=11)
