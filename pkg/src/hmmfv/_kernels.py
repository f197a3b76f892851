"""Hot per-cell loops, JIT-compiled with numba when available.

Every kernel is a plain Python function operating on flat numpy arrays;
when numba is importable (and not disabled) the functions below are wrapped
with ``@njit(cache=True)``.  Set the environment variable ``HMMFV_NUMBA=0``
to force the un-jitted fallback path.  The jitted and fallback paths run
the identical source, so results are bitwise equal.
"""

import os

import numpy as np

_flag = os.environ.get("HMMFV_NUMBA", "auto").strip().lower()
if _flag in ("0", "false", "off", "no"):
    HAVE_NUMBA = False
else:
    try:
        from numba import njit as _njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

USING_NUMBA = HAVE_NUMBA

if HAVE_NUMBA:
    def _jit(fn):
        return _njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn


@_jit
def cell_geometry(coords, ptr, vids, areas, centers, normals, dists):
    """Polygon areas, centroids and per-edge outward normals / distances.

    Cells are CSR-encoded counterclockwise vertex loops: cell k owns
    ``vids[ptr[k]:ptr[k+1]]``; edge j of cell k joins local vertices j and
    j+1 (mod m) and lives at flat position ptr[k]+j.  ``dists`` receives the
    orthogonal distance from the centroid to each edge line (signed;
    negative means the centroid lies on the outward side).
    """
    n_cells = ptr.shape[0] - 1
    for k in range(n_cells):
        lo = ptr[k]
        hi = ptr[k + 1]
        m = hi - lo
        a2 = 0.0
        cx = 0.0
        cy = 0.0
        for j in range(m):
            x0 = coords[vids[lo + j], 0]
            y0 = coords[vids[lo + j], 1]
            jn = lo + j + 1 if j + 1 < m else lo
            x1 = coords[vids[jn], 0]
            y1 = coords[vids[jn], 1]
            cross = x0 * y1 - x1 * y0
            a2 += cross
            cx += (x0 + x1) * cross
            cy += (y0 + y1) * cross
        areas[k] = 0.5 * a2
        if a2 != 0.0:
            centers[k, 0] = cx / (3.0 * a2)
            centers[k, 1] = cy / (3.0 * a2)
        for j in range(m):
            p = lo + j
            x0 = coords[vids[p], 0]
            y0 = coords[vids[p], 1]
            jn = lo + j + 1 if j + 1 < m else lo
            x1 = coords[vids[jn], 0]
            y1 = coords[vids[jn], 1]
            ex = x1 - x0
            ey = y1 - y0
            length = np.sqrt(ex * ex + ey * ey)
            if length > 0.0:
                nx = ey / length
                ny = -ex / length
            else:
                nx = 0.0
                ny = 0.0
            normals[p, 0] = nx
            normals[p, 1] = ny
            mx = 0.5 * (x0 + x1)
            my = 0.5 * (y0 + y1)
            dists[p] = nx * (mx - centers[k, 0]) + ny * (my - centers[k, 1])


@_jit
def cell_gradients(ptr, fids, smeas, normals, areas, face_vals, grads):
    """Cell-wise constant gradient from face values.

    grad_K = (1/|K|) sum_sigma |sigma| phi_sigma n_{K,sigma}
    """
    n_cells = ptr.shape[0] - 1
    for k in range(n_cells):
        gx = 0.0
        gy = 0.0
        for p in range(ptr[k], ptr[k + 1]):
            s = smeas[p] * face_vals[fids[p]]
            gx += s * normals[p, 0]
            gy += s * normals[p, 1]
        grads[k, 0] = gx / areas[k]
        grads[k, 1] = gy / areas[k]


@_jit
def diamond_fields(ptr, fids, smeas, normals, dists, xsig, centers, areas,
                   cell_vals, face_vals, grads, resid, field):
    """Stabilised gradient reconstruction, piecewise constant per diamond.

    Fills the cell gradients, the per-face stabilisation residuals
    r = phi_sigma - phi_K - grad_K . (x_sigma - x_K), and the diamond field
    grad_K + (sqrt(2)/d) r n.
    """
    sqrt_d = np.sqrt(2.0)
    n_cells = ptr.shape[0] - 1
    for k in range(n_cells):
        gx = 0.0
        gy = 0.0
        for p in range(ptr[k], ptr[k + 1]):
            s = smeas[p] * face_vals[fids[p]]
            gx += s * normals[p, 0]
            gy += s * normals[p, 1]
        gx /= areas[k]
        gy /= areas[k]
        grads[k, 0] = gx
        grads[k, 1] = gy
        for p in range(ptr[k], ptr[k + 1]):
            r = (face_vals[fids[p]] - cell_vals[k]
                 - gx * (xsig[p, 0] - centers[k, 0])
                 - gy * (xsig[p, 1] - centers[k, 1]))
            resid[p] = r
            c = sqrt_d / dists[p] * r
            field[p, 0] = gx + c * normals[p, 0]
            field[p, 1] = gy + c * normals[p, 1]


@_jit
def diffusion_coo(ptr, face_dofs, smeas, normals, dists, xsig, centers, areas,
                  out_ptr, rows, cols, vals):
    """COO triplets of the stabilised gradient bilinear form.

    Per cell the local matrix over (m face dofs, 1 cell dof) is

        |K| G^T G  +  sum_j (|sigma_j|/d_j) R_j^T R_j

    with G the cell-gradient map and R_j the j-th stabilisation residual
    row.  Cross terms between G and R cancel exactly, which is what makes
    this equal the diamond-wise integral of the reconstructed gradients.
    Triplets for cell k start at out_ptr[k]; cell dofs are the cell ids.
    """
    n_cells = ptr.shape[0] - 1
    for k in range(n_cells):
        lo = ptr[k]
        m = ptr[k + 1] - lo
        G = np.empty((2, m))
        X = np.empty((2, m))
        w = np.empty(m)
        for j in range(m):
            p = lo + j
            G[0, j] = smeas[p] * normals[p, 0] / areas[k]
            G[1, j] = smeas[p] * normals[p, 1] / areas[k]
            X[0, j] = xsig[p, 0] - centers[k, 0]
            X[1, j] = xsig[p, 1] - centers[k, 1]
            w[j] = smeas[p] / dists[p]
        R = np.empty((m, m + 1))
        for j in range(m):
            for i in range(m):
                R[j, i] = -(X[0, j] * G[0, i] + X[1, j] * G[1, i])
            R[j, j] += 1.0
            R[j, m] = -1.0
        base = out_ptr[k]
        idx = 0
        for a in range(m + 1):
            dof_a = face_dofs[lo + a] if a < m else k
            for b in range(m + 1):
                dof_b = face_dofs[lo + b] if b < m else k
                v = 0.0
                if a < m and b < m:
                    v += areas[k] * (G[0, a] * G[0, b] + G[1, a] * G[1, b])
                for j in range(m):
                    v += w[j] * R[j, a] * R[j, b]
                rows[base + idx] = dof_a
                cols[base + idx] = dof_b
                vals[base + idx] = v
                idx += 1


def py_func(kernel):
    """Un-jitted version of a kernel (the kernel itself on the fallback path)."""
    return getattr(kernel, "py_func", kernel)
