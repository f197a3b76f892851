"""Quadrature rules on segments and triangles."""

import numpy as np

# Six-point symmetric triangle rule, exact through degree 4.
# Barycentric coordinates; weights sum to one.
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRIANGLE_DEG4_BARY = np.array([
    [1.0 - 2.0 * _A1, _A1, _A1],
    [_A1, 1.0 - 2.0 * _A1, _A1],
    [_A1, _A1, 1.0 - 2.0 * _A1],
    [1.0 - 2.0 * _A2, _A2, _A2],
    [_A2, 1.0 - 2.0 * _A2, _A2],
    [_A2, _A2, 1.0 - 2.0 * _A2],
])
TRIANGLE_DEG4_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

_GAUSS2_OFFSET = 0.5 / np.sqrt(3.0)


def refine_triangles(tris, levels):
    """Uniformly split triangles into 4**levels congruent children.

    ``tris`` has shape (T, 3, 2).  Children of triangle t occupy the
    contiguous block [t * 4**levels, (t+1) * 4**levels) of the result, so a
    per-parent bookkeeping array can simply be `np.repeat`-ed.
    """
    tris = np.asarray(tris, dtype=float)
    for _ in range(int(levels)):
        a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
        ab, bc, ca = 0.5 * (a + b), 0.5 * (b + c), 0.5 * (c + a)
        children = np.stack([
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ], axis=1)
        tris = children.reshape(-1, 3, 2)
    return tris


def triangle_rule(tris, levels=0):
    """Points and weights integrating over a batch of triangles.

    Applies the degree-4 rule on each (optionally refined) triangle.
    Returns points (P, 2) and weights (P,) with the weights of each input
    triangle summing to its area; points of triangle t form a contiguous
    block of length 6 * 4**levels.
    """
    tris = refine_triangles(tris, levels)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    areas = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = np.einsum("qb,tbx->tqx", TRIANGLE_DEG4_BARY, tris)
    w = areas[:, None] * TRIANGLE_DEG4_WEIGHTS[None, :]
    return pts.reshape(-1, 2), w.reshape(-1)


def segment_rule(a, b):
    """Two-point Gauss rule on segments, exact through cubics.

    ``a``, ``b``: (..., 2) endpoint arrays.  Returns points (..., 2, 2) and
    weights (..., 2) summing to the segment length.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    mid = 0.5 * (a + b)
    half = (b - a) * _GAUSS2_OFFSET
    pts = np.stack([mid - half, mid + half], axis=-2)
    length = np.linalg.norm(b - a, axis=-1)
    w = np.repeat(length[..., None] / 2.0, 2, axis=-1)
    return pts, w
