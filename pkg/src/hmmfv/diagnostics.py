"""Quality measures of a discretisation: coercivity, consistency, conformity.

All three are evaluated as finite-dimensional norms or extremal problems on
the zero-boundary subspace:

* the coercivity constant is the square root of the largest eigenvalue of
  the generalized problem  M phi = lambda A phi  (function Gram versus
  gradient Gram), found by power iteration on A^{-1} M;
* the consistency defect is the upper bound attained at the canonical
  interpolant (face means + cell means) of a smooth function;
* the limit-conformity defect of a flux field psi is sqrt(b^T A^{-1} b)
  with b the load testing the discrete integration-by-parts identity.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .hmm import (DiscreteVector, assemble_diffusion, cell_means,
                  reconstruct_gradient)
from .mesh import mesh_size
from .quadrature import segment_rule, triangle_rule
from .solver import LinearSolveFailure

#: Quadrature refinement for the consistency / conformity integrals.
QUAD_LEVELS = 2


class PowerIterationError(RuntimeError):
    """Eigenvalue iteration failed to settle within the iteration cap."""


@dataclass
class GdmQualityReport:
    h: float
    coercivity: float
    consistency: dict      # label -> defect
    limit_conformity: dict  # label -> defect


def _gradient_gram(disc):
    m = disc.n_zero_dofs
    return assemble_diffusion(disc, 1.0)[:m, :m].tocsc()


def coercivity_constant(disc, tol=1e-8, max_iter=10_000, return_vector=False):
    """Discrete Poincare constant max ||Pi phi|| / ||grad_D phi||.

    Power iteration on A^{-1} M with the deterministic seed "ones on
    cells, zero on faces", stopping at relative eigenvalue change ``tol``.
    """
    m = disc.n_zero_dofs
    n_c = disc.n_cells
    a = _gradient_gram(disc)
    lu = spla.splu(a)
    vols = disc.mesh.cell_measures

    def mass_apply(x):
        out = np.zeros(m)
        out[:n_c] = vols * x[:n_c]
        return out

    x = np.zeros(m)
    x[:n_c] = 1.0
    x /= np.sqrt(x @ (a @ x))
    lam = float(x @ mass_apply(x))  # Rayleigh quotient, x is A-normalized
    for _ in range(max_iter):
        y = lu.solve(mass_apply(x))
        ny = float(np.sqrt(y @ (a @ y)))
        if ny == 0.0:
            lam = 0.0
            break
        x = y / ny
        lam_new = float(x @ mass_apply(x))
        if abs(lam_new - lam) <= tol * max(lam_new, 1e-300):
            lam = lam_new
            break
        lam = lam_new
    else:
        raise PowerIterationError(
            f"no convergence to relative tolerance {tol:g} in {max_iter} iterations")
    value = float(np.sqrt(lam))
    if return_vector:
        return value, disc.from_dof_array(
            np.concatenate([x, np.zeros(disc.n_dofs - m)]))
    return value


def canonical_interpolant(disc, phi):
    """Face means and cell means of a smooth function (all faces filled)."""
    mesh = disc.mesh
    a = mesh.vertex_coords[mesh.face_vertices[:, 0]]
    b = mesh.vertex_coords[mesh.face_vertices[:, 1]]
    pts, w = segment_rule(a, b)
    face_vals = (w * phi(pts[..., 0], pts[..., 1])).sum(axis=-1) / mesh.face_measures
    return DiscreteVector(cell_means(mesh, phi, levels=QUAD_LEVELS), face_vals)


def consistency_defect(disc, phi, grad_phi, levels=QUAD_LEVELS):
    """Upper bound of the best-approximation defect of (phi, grad phi).

    Evaluates || Pi_D w - phi || + || grad_D w - grad phi || at the
    canonical interpolant w.  This bounds the true minimum from above,
    which is all the refinement trend needs.
    """
    w = canonical_interpolant(disc, phi)
    mesh = disc.mesh
    pts, qw = triangle_rule(mesh.diamond_triangles(), levels=levels)
    block = 6 * 4 ** levels
    counts = np.diff(mesh.cell_vertex_ptr)

    cell_rep = np.repeat(np.repeat(w.cell_values, counts), block)
    value_sq = (qw * (cell_rep - phi(pts[:, 0], pts[:, 1])) ** 2).sum()

    field = reconstruct_gradient(disc, w).values
    field_rep = np.repeat(field, block, axis=0)
    exact = grad_phi(pts[:, 0], pts[:, 1])
    grad_sq = (qw * ((field_rep - exact) ** 2).sum(axis=1)).sum()
    return float(np.sqrt(value_sq) + np.sqrt(grad_sq))


def _conformity_load(disc, psi, div_psi, levels=QUAD_LEVELS):
    """Load b_i = int(grad_D e_i . psi + Pi_D e_i div psi) over all dofs."""
    mesh = disc.mesh
    pts, qw = triangle_rule(mesh.diamond_triangles(), levels=levels)
    block = 6 * 4 ** levels
    nnz = len(disc.fids)
    pos = np.repeat(np.arange(nnz), block)

    vals = psi(pts[:, 0], pts[:, 1])               # (P, 2)
    moments = np.zeros((nnz, 2))                   # int_D psi per diamond
    np.add.at(moments, pos, qw[:, None] * vals)
    div_int = np.bincount(pos, weights=qw * div_psi(pts[:, 0], pts[:, 1]),
                          minlength=nnz)

    b = np.zeros(disc.n_dofs)
    centers = disc.mesh.cell_centers
    vols = disc.mesh.cell_measures
    for k in range(disc.n_cells):
        lo, hi = disc.ptr[k], disc.ptr[k + 1]
        m = hi - lo
        g = (disc.smeas[lo:hi, None] * disc.normals[lo:hi]).T / vols[k]  # (2, m)
        x = (disc.xsig[lo:hi] - centers[k]).T                            # (2, m)
        alpha = disc.stab_coeff[lo:hi]
        p_mom = moments[lo:hi]                                           # (m, 2)
        n_dot_p = (disc.normals[lo:hi] * p_mom).sum(axis=1)
        dofs = disc.face_dofs[lo:hi]
        # consistent part: G^T sum_j P_j, stabilisation part per diamond j
        b[dofs] += g.T @ p_mom.sum(axis=0)
        b[dofs] += alpha * n_dot_p
        b[dofs] -= g.T @ (x @ (alpha * n_dot_p))
        b[k] += -np.sum(alpha * n_dot_p) + div_int[lo:hi].sum()
    return b


def limit_conformity_defect(disc, psi, div_psi, levels=QUAD_LEVELS):
    """Defect of discrete integration by parts against a smooth flux field.

    W(psi) = sup_w |int(grad_D w . psi + Pi_D w div psi)| / ||grad_D w||
    over the zero-boundary space, i.e. sqrt(b^T A^{-1} b).
    """
    m = disc.n_zero_dofs
    b = _conformity_load(disc, psi, div_psi, levels=levels)[:m]
    if not np.any(b):
        return 0.0
    a = _gradient_gram(disc)
    x = spla.splu(a).solve(b)
    rel = np.linalg.norm(a @ x - b) / np.linalg.norm(b)
    if rel > 1e-12:
        raise LinearSolveFailure(
            f"conformity solve reached relative residual {rel:.3e}")
    return float(np.sqrt(max(b @ x, 0.0)))


def dual_norm(disc, w_cells):
    """Norm of a cell field acting on gradient-normalized test vectors.

    sup { int w Pi_D phi : ||grad_D phi|| = 1 } = sqrt(c^T A^{-1} c) with
    c_i = int w Pi_D e_i.
    """
    m = disc.n_zero_dofs
    c = np.zeros(m)
    c[:disc.n_cells] = disc.mesh.cell_measures * np.asarray(w_cells, dtype=float)
    if not np.any(c):
        return 0.0
    a = _gradient_gram(disc)
    x = spla.splu(a).solve(c)
    return float(np.sqrt(max(c @ x, 0.0)))


# Named sample inputs for ladder studies (label -> callables).
S_SAMPLES = {
    "sin2d": (
        lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y),
        lambda x, y: np.stack([np.pi * np.cos(np.pi * x) * np.sin(np.pi * y),
                               np.pi * np.sin(np.pi * x) * np.cos(np.pi * y)],
                              axis=-1),
    ),
    "affine": (
        lambda x, y: 1.0 + 2.0 * x + 3.0 * y,
        lambda x, y: np.stack([2.0 + 0.0 * x, 3.0 + 0.0 * y], axis=-1),
    ),
    "constant": (
        lambda x, y: 1.0 + 0.0 * x,
        lambda x, y: np.zeros(np.broadcast(x, y).shape + (2,)),
    ),
}

W_SAMPLES = {
    "linear_x": (
        lambda x, y: np.stack([x, 0.0 * y], axis=-1),
        lambda x, y: 1.0 + 0.0 * x,
    ),
    "constant": (
        lambda x, y: np.stack([np.full_like(x, 1.0), np.full_like(y, 1.0)],
                              axis=-1),
        lambda x, y: 0.0 * x,
    ),
}


def gdm_quality_report(disc, s_labels=("sin2d",), w_labels=("linear_x", "constant")):
    """Evaluate the standard quality measures for the given sample labels."""
    consistency = {}
    for label in s_labels:
        phi, grad = S_SAMPLES[label]
        consistency[label] = consistency_defect(disc, phi, grad)
    conformity = {}
    for label in w_labels:
        psi, div = W_SAMPLES[label]
        conformity[label] = limit_conformity_defect(disc, psi, div)
    return GdmQualityReport(h=mesh_size(disc.mesh),
                            coercivity=coercivity_constant(disc),
                            consistency=consistency,
                            limit_conformity=conformity)
