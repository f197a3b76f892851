"""General polytopal cells (quads, mixed meshes) through the full stack.

The generators only emit triangles, so these tests are what exercise the
variable-face-count paths of the kernels and the scheme.
"""

import numpy as np
import pytest

from conftest import random_zero_boundary
from hmmfv import (DiscreteVector, HmmDiscretisation, TimeGrid,
                   assemble_diffusion, reconstruct_gradient, solve_transient,
                   validate)
from hmmfv.mesh import load_mesh

TWO_QUADS = """
vertices 6
0 0
0.5 0
1 0
0 1
0.5 1
1 1
cells 2
4 0 1 4 3
4 1 2 5 4
"""

# one quad below, two triangles above, conforming across y = 0.5
MIXED = """
vertices 6
0 0
1 0
0 0.5
1 0.5
0 1
1 1
cells 3
4 0 1 3 2
3 2 3 5
3 2 5 4
"""


@pytest.fixture(scope="module", params=[TWO_QUADS, MIXED])
def poly_disc(request):
    return HmmDiscretisation(load_mesh(request.param))


def test_polygonal_geometry_identities(poly_disc):
    report = validate(poly_disc.mesh)
    assert report.max_closedness_defect <= 1e-13
    assert report.max_stokes_defect <= 1e-13
    assert report.max_diamond_defect <= 1e-13
    assert report.total_area == pytest.approx(1.0, abs=1e-13)
    assert report.euler_ok
    assert report.passed


def test_mixed_mesh_counts():
    mesh = load_mesh(MIXED)
    assert (mesh.n_cells, mesh.n_faces, mesh.n_vertices) == (3, 8, 6)
    counts = np.diff(mesh.cell_vertex_ptr)
    assert sorted(counts) == [3, 3, 4]


def test_affine_exactness_on_polygons(poly_disc):
    a = np.array([1.1, -0.4])
    mesh = poly_disc.mesh
    phi = DiscreteVector(mesh.cell_centers @ a + 0.3,
                         mesh.face_centers @ a + 0.3)
    field = reconstruct_gradient(poly_disc, phi)
    assert np.abs(field.values - a).max() <= 1e-12


def test_energy_identity_on_polygons(poly_disc, rng):
    a = assemble_diffusion(poly_disc, 1.0)
    for _ in range(5):
        phi = random_zero_boundary(poly_disc, rng)
        z = poly_disc.to_dof_array(phi)
        field = reconstruct_gradient(poly_disc, phi)
        direct = (field.volumes * (field.values ** 2).sum(axis=1)).sum()
        assert z @ (a @ z) == pytest.approx(direct, rel=1e-12)


def test_transient_affine_steady_state_on_mixed_mesh():
    from test_solver import affine_spec, affine_state

    disc = HmmDiscretisation(load_mesh(MIXED))
    spec = affine_spec()
    sol = solve_transient(disc, spec, TimeGrid.uniform(0.2, 4))
    target = affine_state(disc)
    for level in sol.stored_levels:
        u, v = sol.state(level)
        if level == 0:
            continue
        assert np.abs(u.cell_values - target.cell_values).max() <= 1e-10
        assert np.abs(v.face_values - target.face_values).max() <= 1e-10
