"""Hybrid Mimetic Mixed finite volumes for two-species reaction-diffusion systems."""

__version__ = "0.1.0"

from ._kernels import HAVE_NUMBA, USING_NUMBA
from .mesh import (PolytopalMesh, build_structured_triangular, load_mesh,
                   mesh_size, validate)
from .hmm import (DiamondField, DiscreteVector, HmmDiscretisation,
                  assemble_diffusion, assemble_mass, cell_gradient,
                  interpolate_boundary, interpolate_initial,
                  reconstruct_function, reconstruct_gradient, stabilisation)
from .kinetics import BrusselatorParams, KineticsModel, brusselator, jacobian
from .solver import (NewtonConfig, ProblemSpec, TimeGrid, TransientSolution,
                     advance_step, solve_transient)
from .diagnostics import (GdmQualityReport, coercivity_constant,
                          consistency_defect, dual_norm,
                          limit_conformity_defect)
from .verify import (ConvergenceTable, ErrorReport, ExactSolution,
                     brusselator_exact, convergence_rate,
                     relative_gradient_error, relative_value_error,
                     run_convergence_study)

__all__ = [
    "HAVE_NUMBA", "USING_NUMBA", "__version__",
    "PolytopalMesh", "build_structured_triangular", "load_mesh", "mesh_size",
    "validate",
    "DiamondField", "DiscreteVector", "HmmDiscretisation", "assemble_diffusion",
    "assemble_mass", "cell_gradient", "interpolate_boundary",
    "interpolate_initial", "reconstruct_function", "reconstruct_gradient",
    "stabilisation",
    "BrusselatorParams", "KineticsModel", "brusselator", "jacobian",
    "NewtonConfig", "ProblemSpec", "TimeGrid", "TransientSolution",
    "advance_step", "solve_transient",
    "GdmQualityReport", "coercivity_constant", "consistency_defect",
    "dual_norm", "limit_conformity_defect",
    "ConvergenceTable", "ErrorReport", "ExactSolution", "brusselator_exact",
    "convergence_rate", "relative_gradient_error", "relative_value_error",
    "run_convergence_study",
]
