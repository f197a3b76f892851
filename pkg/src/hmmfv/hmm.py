"""Hybrid Mimetic Mixed discretisation: discrete spaces and reconstructions.

One unknown per cell and per face.  The function reconstruction is piecewise
constant on cells; the gradient reconstruction is piecewise constant on the
(cell, face) diamonds and combines the cell-wise consistent gradient with a
per-face stabilisation residual scaled by sqrt(d)/d_{K,sigma} (d = 2).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .quadrature import segment_rule, triangle_rule

#: Uniform refinement depth for cell-mean quadrature; deep enough that the
#: composite degree-4 rule resolves smooth integrands to ~1e-11 on unit-size
#: cells, far below any scheme error on refined meshes.
CELL_QUAD_LEVELS = 3


@dataclass
class DiscreteVector:
    """One element of the hybrid space: a value per cell and per face."""

    cell_values: np.ndarray
    face_values: np.ndarray

    def copy(self):
        return DiscreteVector(self.cell_values.copy(), self.face_values.copy())

    def __add__(self, other):
        return DiscreteVector(self.cell_values + other.cell_values,
                              self.face_values + other.face_values)

    def __sub__(self, other):
        return DiscreteVector(self.cell_values - other.cell_values,
                              self.face_values - other.face_values)

    def __rmul__(self, a):
        return DiscreteVector(a * self.cell_values, a * self.face_values)


@dataclass
class DiamondField:
    """Piecewise-constant vector field on diamonds, CSR-aligned with cells."""

    values: np.ndarray    # (nnz, 2)
    volumes: np.ndarray   # (nnz,) diamond volumes

    def l2_norm(self):
        return float(np.sqrt((self.volumes * (self.values ** 2).sum(axis=1)).sum()))


class HmmDiscretisation:
    """Precomputed operators of the hybrid scheme on a fixed mesh.

    Degree-of-freedom layout: cells first, then interior faces, then
    boundary faces, so the zero-trace subspace is the leading slice of
    length ``n_zero_dofs`` and eliminating Dirichlet faces is an index
    slice, not a search.
    """

    def __init__(self, mesh):
        self.mesh = mesh
        self.ptr = mesh.cell_vertex_ptr
        self.fids = mesh.cell_face_ids
        self.smeas = mesh.face_measures[self.fids]
        self.xsig = mesh.face_centers[self.fids]
        self.normals = mesh.normals
        self.dists = mesh.face_dists
        if np.any(self.dists <= 0.0):
            raise ValueError("cell center on or outside a face line; "
                             "the stabilised scheme needs d_{K,sigma} > 0")
        self.diamond_volumes = self.smeas * self.dists / 2.0
        self.stab_coeff = np.sqrt(2.0) / self.dists

        self.interior_faces = mesh.interior_faces
        self.boundary_faces = mesh.boundary_faces
        face_pos = np.empty(mesh.n_faces, dtype=np.int64)
        face_pos[self.interior_faces] = np.arange(len(self.interior_faces))
        face_pos[self.boundary_faces] = (len(self.interior_faces)
                                         + np.arange(len(self.boundary_faces)))
        self.face_pos = face_pos
        self.face_order = np.concatenate([self.interior_faces, self.boundary_faces])
        self.face_dofs = mesh.n_cells + face_pos[self.fids]  # per CSR position

    @property
    def n_cells(self):
        return self.mesh.n_cells

    @property
    def n_faces(self):
        return self.mesh.n_faces

    @property
    def n_interior_faces(self):
        return len(self.interior_faces)

    @property
    def n_dofs(self):
        return self.mesh.n_cells + self.mesh.n_faces

    @property
    def n_zero_dofs(self):
        """Dimension of the zero-boundary subspace (cells + interior faces)."""
        return self.mesh.n_cells + len(self.interior_faces)

    # -- vector <-> dof layout ----------------------------------------------

    def new_vector(self, fill=0.0):
        return DiscreteVector(np.full(self.n_cells, fill, dtype=float),
                              np.full(self.n_faces, fill, dtype=float))

    def to_dof_array(self, vec):
        return np.concatenate([vec.cell_values, vec.face_values[self.face_order]])

    def from_dof_array(self, dofs):
        vec = self.new_vector()
        vec.cell_values[:] = dofs[:self.n_cells]
        vec.face_values[self.face_order] = dofs[self.n_cells:]
        return vec

    def basis_vector(self, dof):
        z = np.zeros(self.n_dofs)
        z[dof] = 1.0
        return self.from_dof_array(z)

    # -- norms ---------------------------------------------------------------

    def cell_field_l2_norm(self, cell_values):
        return float(np.sqrt((self.mesh.cell_measures * cell_values ** 2).sum()))

    def diamond_points(self):
        """Midpoints (x_K + x_sigma)/2, one per diamond."""
        counts = np.diff(self.ptr)
        centers = np.repeat(self.mesh.cell_centers, counts, axis=0)
        return 0.5 * (centers + self.xsig)


def cell_gradient(disc, phi, k):
    """Consistent gradient of one cell, (1/|K|) sum |sigma| phi_sigma n."""
    lo, hi = disc.ptr[k], disc.ptr[k + 1]
    vals = phi.face_values[disc.fids[lo:hi]]
    return (disc.smeas[lo:hi, None] * vals[:, None]
            * disc.normals[lo:hi]).sum(axis=0) / disc.mesh.cell_measures[k]


def cell_gradients(disc, phi):
    """Consistent gradients of all cells, (n_cells, 2)."""
    grads = np.empty((disc.n_cells, 2))
    _kernels.cell_gradients(disc.ptr, disc.fids, disc.smeas, disc.normals,
                            disc.mesh.cell_measures, phi.face_values, grads)
    return grads


def stabilisation(disc, phi, k):
    """Per-face residuals phi_sigma - phi_K - grad_K . (x_sigma - x_K)."""
    lo, hi = disc.ptr[k], disc.ptr[k + 1]
    grad = cell_gradient(disc, phi, k)
    x_k = disc.mesh.cell_centers[k]
    return (phi.face_values[disc.fids[lo:hi]] - phi.cell_values[k]
            - (disc.xsig[lo:hi] - x_k) @ grad)


def reconstruct_gradient(disc, phi):
    """Stabilised gradient as a piecewise-constant diamond field."""
    grads = np.empty((disc.n_cells, 2))
    resid = np.empty(len(disc.fids))
    field = np.empty((len(disc.fids), 2))
    _kernels.diamond_fields(disc.ptr, disc.fids, disc.smeas, disc.normals,
                            disc.dists, disc.xsig, disc.mesh.cell_centers,
                            disc.mesh.cell_measures, phi.cell_values,
                            phi.face_values, grads, resid, field)
    return DiamondField(field, disc.diamond_volumes)


def reconstruct_function(disc, phi):
    """Piecewise-constant function reconstruction: the cell values."""
    return phi.cell_values.copy()


def interpolate_initial(disc, w, levels=CELL_QUAD_LEVELS):
    """Interpolate initial data: cell means by quadrature, zero face values."""
    vec = disc.new_vector()
    vec.cell_values[:] = cell_means(disc.mesh, w, levels=levels)
    return vec


def cell_means(mesh, f, levels=CELL_QUAD_LEVELS):
    """Mean of ``f(x, y)`` over every cell, by composite quadrature.

    Cells are fanned into their diamond triangles (exact for star-shaped
    cells with interior centroid), each refined ``levels`` times.
    """
    pts, w = triangle_rule(mesh.diamond_triangles(), levels=levels)
    counts = np.diff(mesh.cell_vertex_ptr) * (6 * 4 ** levels)
    owner = np.repeat(np.arange(mesh.n_cells), counts)
    integrals = np.bincount(owner, weights=w * f(pts[:, 0], pts[:, 1]),
                            minlength=mesh.n_cells)
    return integrals / mesh.cell_measures


def interpolate_boundary(disc, g, t):
    """Face means of boundary data at time t, one per boundary face.

    Returned array aligns with ``disc.boundary_faces``; interior faces are
    not touched by boundary interpolation.
    """
    bf = disc.boundary_faces
    mesh = disc.mesh
    a = mesh.vertex_coords[mesh.face_vertices[bf, 0]]
    b = mesh.vertex_coords[mesh.face_vertices[bf, 1]]
    pts, w = segment_rule(a, b)
    vals = g(pts[..., 0], pts[..., 1], t)
    return (w * vals).sum(axis=-1) / mesh.face_measures[bf]


def apply_boundary_values(disc, vec, g, t):
    """Overwrite the boundary faces of ``vec`` with interpolated data."""
    vec.face_values[disc.boundary_faces] = interpolate_boundary(disc, g, t)
    return vec


def assemble_diffusion(disc, mu):
    """Gradient Gram matrix mu * int grad_D e_i . grad_D e_j over all dofs.

    Symmetric, positive semidefinite (constants are in the kernel), and
    positive definite on the zero-boundary slice.  CSR, size n_dofs.
    """
    counts = np.diff(disc.ptr)
    out_ptr = np.zeros(disc.n_cells + 1, dtype=np.int64)
    np.cumsum((counts + 1) ** 2, out=out_ptr[1:])
    nnz = int(out_ptr[-1])
    rows = np.empty(nnz, dtype=np.int64)
    cols = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz)
    _kernels.diffusion_coo(disc.ptr, disc.face_dofs, disc.smeas, disc.normals,
                           disc.dists, disc.xsig, disc.mesh.cell_centers,
                           disc.mesh.cell_measures, out_ptr, rows, cols, vals)
    n = disc.n_dofs
    a = sp.coo_matrix((mu * vals, (rows, cols)), shape=(n, n)).tocsr()
    a.sum_duplicates()
    return a


def assemble_mass(disc):
    """Gram matrix of the function reconstruction: diag(|K|) on cell dofs."""
    return sp.diags(disc.mesh.cell_measures, format="csr")
