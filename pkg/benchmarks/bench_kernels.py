"""Benchmark the jitted kernels against their un-jitted fallbacks.

Runs each hot kernel on a structured mesh through the numba dispatcher and
through the plain-Python ``py_func`` path (what you get with
``HMMFV_NUMBA=0``), and prints a timing table.

    python3 benchmarks/bench_kernels.py --level 64 --repeat 5
"""

import argparse
import time

import numpy as np

from hmmfv import _kernels
from hmmfv.hmm import HmmDiscretisation
from hmmfv.mesh import build_structured_triangular


def timed(fn, args, repeat):
    best = np.inf
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench(disc, repeat):
    mesh = disc.mesh
    nnz = len(disc.fids)
    rng = np.random.default_rng(0)
    cell_vals = rng.normal(size=disc.n_cells)
    face_vals = rng.normal(size=disc.n_faces)

    jobs = []

    geo_args = (mesh.vertex_coords, mesh.cell_vertex_ptr, mesh.cell_vertex_ids,
                np.empty(disc.n_cells), np.empty((disc.n_cells, 2)),
                np.empty((nnz, 2)), np.empty(nnz))
    jobs.append(("cell_geometry", _kernels.cell_geometry, geo_args))

    grad_args = (disc.ptr, disc.fids, disc.smeas, disc.normals,
                 mesh.cell_measures, face_vals, np.empty((disc.n_cells, 2)))
    jobs.append(("cell_gradients", _kernels.cell_gradients, grad_args))

    field_args = (disc.ptr, disc.fids, disc.smeas, disc.normals, disc.dists,
                  disc.xsig, mesh.cell_centers, mesh.cell_measures,
                  cell_vals, face_vals, np.empty((disc.n_cells, 2)),
                  np.empty(nnz), np.empty((nnz, 2)))
    jobs.append(("diamond_fields", _kernels.diamond_fields, field_args))

    counts = np.diff(disc.ptr)
    out_ptr = np.zeros(disc.n_cells + 1, dtype=np.int64)
    np.cumsum((counts + 1) ** 2, out=out_ptr[1:])
    n_triplets = int(out_ptr[-1])
    coo_args = (disc.ptr, disc.face_dofs, disc.smeas, disc.normals, disc.dists,
                disc.xsig, mesh.cell_centers, mesh.cell_measures, out_ptr,
                np.empty(n_triplets, dtype=np.int64),
                np.empty(n_triplets, dtype=np.int64), np.empty(n_triplets))
    jobs.append(("diffusion_coo", _kernels.diffusion_coo, coo_args))

    print(f"{'kernel':<16} {'numba':>12} {'numpy/python':>14} {'speedup':>9}")
    for name, kernel, args in jobs:
        fallback = _kernels.py_func(kernel)
        if _kernels.USING_NUMBA:
            kernel(*args)  # compile before timing
            t_jit = timed(kernel, args, repeat)
        else:
            t_jit = float("nan")
        t_py = timed(fallback, args, repeat)
        speedup = t_py / t_jit if t_jit == t_jit else float("nan")
        print(f"{name:<16} {t_jit * 1e3:>10.3f}ms {t_py * 1e3:>12.3f}ms "
              f"{speedup:>8.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--level", type=int, default=64,
                        help="structured mesh subdivisions (default 64)")
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.USING_NUMBA:
        print("note: numba path disabled (HMMFV_NUMBA=0 or numba missing); "
              "timing the fallback only")
    mesh = build_structured_triangular(args.level)
    disc = HmmDiscretisation(mesh)
    print(f"mesh: {mesh.n_cells} cells, {mesh.n_faces} faces "
          f"({len(disc.fids)} diamonds)")
    bench(disc, args.repeat)


if __name__ == "__main__":
    main()
