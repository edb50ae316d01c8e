import numpy as np
import pytest

from mvinpaint import tessellate
from mvinpaint.mesh import TriangleMesh, normalize_mesh

# unit cube [-0.5, 0.5]^3 with a fixed, hand-checkable face list (12 triangles)
CUBE_VERTICES = 0.5 * np.array(
    [
        [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
        [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
    ],
    dtype=np.float64,
)
CUBE_FACES = np.array(
    [
        [0, 2, 1], [0, 3, 2],
        [4, 5, 6], [4, 6, 7],
        [0, 1, 5], [0, 5, 4],
        [3, 7, 6], [3, 6, 2],
        [0, 4, 7], [0, 7, 3],
        [1, 2, 6], [1, 6, 5],
    ],
    dtype=np.int32,
)


@pytest.fixture
def cube():
    return TriangleMesh(CUBE_VERTICES.copy(), CUBE_FACES.copy())


@pytest.fixture
def demo_mesh():
    mesh, _ = normalize_mesh(tessellate.make_demo_shape(np.random.default_rng(11)))
    return mesh


@pytest.fixture
def sphere_mesh():
    mesh = tessellate.make_ellipsoid(radii=(0.5, 0.5, 0.5), segments=32, rings=16)
    return mesh


def random_soup(rng: np.random.Generator, n_faces: int = 20) -> TriangleMesh:
    """Unstructured triangle soup for property tests."""
    verts = rng.uniform(-1.0, 1.0, size=(3 * n_faces, 3))
    faces = np.arange(3 * n_faces, dtype=np.int32).reshape(n_faces, 3)
    return TriangleMesh(verts, faces)
