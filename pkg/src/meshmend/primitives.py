"""Small procedural meshes for demos and tests."""

import numpy as np

from .mesh import Mesh

__all__ = ["box", "unit_cube", "icosahedron", "crossing_triangles", "nested_cubes"]

# outward-wound faces of an axis-aligned box over corners indexed by (x, y, z) bits
_BOX_FACES = np.array([
    [0, 2, 1], [1, 2, 3],  # z = lo
    [4, 5, 6], [5, 7, 6],  # z = hi
    [0, 1, 4], [1, 5, 4],  # y = lo
    [2, 6, 3], [3, 6, 7],  # y = hi
    [0, 4, 2], [2, 4, 6],  # x = lo
    [1, 3, 5], [3, 7, 5],  # x = hi
], dtype=np.int64)


def box(center=(0.0, 0.0, 0.0), size=1.0):
    """Closed axis-aligned box, 8 vertices / 12 outward-facing triangles."""
    center = np.asarray(center, dtype=np.float64)
    half = 0.5 * np.asarray(size, dtype=np.float64) * np.ones(3)
    corners = np.array(
        [[x, y, z] for z in (-1, 1) for y in (-1, 1) for x in (-1, 1)],
        dtype=np.float64,
    )
    return Mesh(center + corners * half, _BOX_FACES.copy())


def unit_cube():
    """Cube spanning [0, 1]^3."""
    return box(center=(0.5, 0.5, 0.5), size=1.0)


def icosahedron(radius=1.0, inward=False):
    """Regular icosahedron centered at the origin; 12 vertices / 20 faces.

    inward=True flips every face so all normals point into the solid.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts *= radius / np.linalg.norm(verts[0])
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    if inward:
        faces = faces[:, [0, 2, 1]]
    return Mesh(verts, faces)


def crossing_triangles():
    """Two triangles that pierce each other through their interiors."""
    verts = np.array([
        [-1.0, -1.0, 0.0], [1.0, -1.0, 0.0], [0.0, 1.0, 0.0],   # in z = 0
        [0.0, -1.0, -1.0], [0.0, 1.0, -1.0], [0.0, 0.0, 1.0],   # in x = 0
    ])
    faces = np.array([[0, 1, 2], [3, 4, 5]], dtype=np.int64)
    return Mesh(verts, faces)


def nested_cubes(outer=2.0, inner=1.0):
    """A cube shell enclosed in a larger one; the inner 12 faces see no sky."""
    a = box(size=outer)
    b = box(size=inner)
    verts = np.vstack([a.vertices, b.vertices])
    faces = np.vstack([a.faces, b.faces + a.n_vertices])
    return Mesh(verts, faces)
