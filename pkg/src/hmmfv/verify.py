"""Manufactured-solution harness: exact data, error norms, convergence tables.

The reference test drives the Brusselator with a = 0, b = 1 and equal
diffusion 0.25, whose exact solution is the separable pair

    u(x, y, t) = exp(-x - y - t/2),    v(x, y, t) = exp(x + y + t/2).

Value errors sample the exact solution at cell centers (the natural
superconvergent comparison for a piecewise-constant reconstruction);
gradient errors sample at diamond midpoints.
"""

import time
from dataclasses import dataclass

import numpy as np

from .hmm import HmmDiscretisation, reconstruct_gradient
from .kinetics import BrusselatorParams, brusselator
from .mesh import build_structured_triangular, mesh_size
from .solver import NewtonConfig, ProblemSpec, TimeGrid, solve_transient


@dataclass(frozen=True)
class ExactSolution:
    """Closed-form space-time solution pair with gradients.

    ``dt_u``/``lap_u`` (and the v analogues) are optional closed forms used
    by the source-balance self-check.
    """

    u: object
    v: object
    grad_u: object
    grad_v: object
    dt_u: object = None
    dt_v: object = None
    lap_u: object = None
    lap_v: object = None


def brusselator_exact():
    """The exponential pair solving the Brusselator system at a=0, b=1."""
    def u(x, y, t):
        return np.exp(-x - y - 0.5 * t)

    def v(x, y, t):
        return np.exp(x + y + 0.5 * t)

    return ExactSolution(
        u=u,
        v=v,
        grad_u=lambda x, y, t: np.stack([-u(x, y, t), -u(x, y, t)], axis=-1),
        grad_v=lambda x, y, t: np.stack([v(x, y, t), v(x, y, t)], axis=-1),
        dt_u=lambda x, y, t: -0.5 * u(x, y, t),
        dt_v=lambda x, y, t: 0.5 * v(x, y, t),
        lap_u=lambda x, y, t: 2.0 * u(x, y, t),
        lap_v=lambda x, y, t: 2.0 * v(x, y, t),
    )


def manufactured_problem(a=0.0, b=1.0, mu1=0.25, mu2=0.25):
    """Problem spec whose data come from the exact pair; returns (spec, exact)."""
    exact = brusselator_exact()
    spec = ProblemSpec(
        mu1=mu1, mu2=mu2,
        kinetics=brusselator(BrusselatorParams(a, b)),
        u_ini=lambda x, y: exact.u(x, y, 0.0),
        v_ini=lambda x, y: exact.v(x, y, 0.0),
        g=exact.u,
        h=exact.v,
    )
    return spec, exact


def pde_residuals(exact, kinetics, mu1, mu2, x, y, t):
    """Source balance of both equations at the given points.

    Uses the closed-form time derivatives and Laplacians carried by the
    exact solution; zero (to rounding) certifies that the pair actually
    solves the system with the given kinetics.
    """
    u = exact.u(x, y, t)
    v = exact.v(x, y, t)
    res_u = exact.dt_u(x, y, t) - mu1 * exact.lap_u(x, y, t) - kinetics.F(u, v)
    res_v = exact.dt_v(x, y, t) - mu2 * exact.lap_v(x, y, t) - kinetics.G(u, v)
    return res_u, res_v


def relative_value_error(disc, vec, exact_fn, t):
    """Relative cell-center L2 distance to the exact solution at time t."""
    centers = disc.mesh.cell_centers
    vols = disc.mesh.cell_measures
    exact = exact_fn(centers[:, 0], centers[:, 1], t)
    denom = np.sqrt((vols * exact ** 2).sum())
    if denom == 0.0:
        raise ValueError("exact solution has zero norm at this time")
    num = np.sqrt((vols * (exact - vec.cell_values) ** 2).sum())
    return float(num / denom)


def relative_gradient_error(disc, vec, exact_grad_fn, t):
    """Relative diamond-wise L2 distance of the reconstructed gradient."""
    pts = disc.diamond_points()
    vols = disc.diamond_volumes
    exact = exact_grad_fn(pts[:, 0], pts[:, 1], t)
    denom = np.sqrt((vols * (exact ** 2).sum(axis=1)).sum())
    if denom == 0.0:
        raise ValueError("exact gradient has zero norm at this time")
    field = reconstruct_gradient(disc, vec).values
    num = np.sqrt((vols * ((exact - field) ** 2).sum(axis=1)).sum())
    return float(num / denom)


def convergence_rate(e_coarse, e_fine, h_coarse, h_fine):
    """Observed order log(e_c / e_f) / log(h_c / h_f)."""
    for name, val in (("e_coarse", e_coarse), ("e_fine", e_fine),
                      ("h_coarse", h_coarse), ("h_fine", h_fine)):
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    if h_coarse == h_fine:
        raise ValueError("mesh sizes must differ")
    return float(np.log(e_coarse / e_fine) / np.log(h_coarse / h_fine))


@dataclass
class ErrorReport:
    h: float
    err_u: float
    err_v: float
    err_grad_u: float
    err_grad_v: float
    runtime: float


class ConvergenceTable:
    """Ordered refinement levels with rates between consecutive ones."""

    FIELDS = ("err_u", "err_v", "err_grad_u", "err_grad_v")

    def __init__(self, reports, newton_iterations=None):
        self.reports = list(reports)
        hs = [r.h for r in self.reports]
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ValueError("levels must be ordered by decreasing h")
        self.newton_iterations = newton_iterations or []

    def rates(self, field):
        out = []
        for prev, cur in zip(self.reports, self.reports[1:]):
            out.append(convergence_rate(getattr(prev, field),
                                        getattr(cur, field), prev.h, cur.h))
        return out

    def regression_slope(self, field):
        """Least-squares slope of log10(err) against log10(h)."""
        hs = np.log10([r.h for r in self.reports])
        es = np.log10([getattr(r, field) for r in self.reports])
        return float(np.polyfit(hs, es, 1)[0])

    def to_csv(self):
        header = "h,err_u,rate_u,err_v,rate_v,err_gu,rate_gu,err_gv,rate_gv,runtime_s"
        rate_cols = {f: self.rates(f) for f in self.FIELDS}
        lines = [header]
        for i, r in enumerate(self.reports):
            def rate(f):
                return f"{rate_cols[f][i - 1]:.9g}" if i > 0 else ""
            lines.append(",".join([
                f"{r.h:.9g}",
                f"{r.err_u:.9g}", rate("err_u"),
                f"{r.err_v:.9g}", rate("err_v"),
                f"{r.err_grad_u:.9g}", rate("err_grad_u"),
                f"{r.err_grad_v:.9g}", rate("err_grad_v"),
                f"{r.runtime:.9g}",
            ]))
        return "\n".join(lines) + "\n"

    def plot_data(self, field):
        """Two-column `log10(h) log10(err)` text for generic plotting tools."""
        lines = [f"{np.log10(r.h):.9g} {np.log10(getattr(r, field)):.9g}"
                 for r in self.reports]
        return "\n".join(lines) + "\n"


def run_convergence_study(levels, dt, T, spec=None, exact=None, cfg=None,
                          store="final"):
    """Solve the transient problem on a refinement ladder and tabulate errors.

    ``levels`` are structured-mesh subdivision counts, coarse to fine.
    Defaults to the manufactured Brusselator problem.
    """
    if spec is None or exact is None:
        default_spec, default_exact = manufactured_problem()
        spec = spec or default_spec
        exact = exact or default_exact
    cfg = cfg or NewtonConfig()
    if list(levels) != sorted(levels):
        raise ValueError("levels must be sorted coarse to fine")
    reports = []
    iteration_log = []
    for n in levels:
        mesh = build_structured_triangular(n)
        disc = HmmDiscretisation(mesh)
        grid = TimeGrid.from_dt(T, dt)
        start = time.perf_counter()
        sol = solve_transient(disc, spec, grid, cfg=cfg, store=store)
        elapsed = time.perf_counter() - start
        u, v = sol.final
        reports.append(ErrorReport(
            h=mesh_size(mesh),
            err_u=relative_value_error(disc, u, exact.u, T),
            err_v=relative_value_error(disc, v, exact.v, T),
            err_grad_u=relative_gradient_error(disc, u, exact.grad_u, T),
            err_grad_v=relative_gradient_error(disc, v, exact.grad_v, T),
            runtime=elapsed,
        ))
        iteration_log.append(list(sol.newton_iterations))
    return ConvergenceTable(reports, newton_iterations=iteration_log)
