"""Radial compressible heat-conducting gas flow simulator.

Simulates spherically symmetric viscous gas flow outside a small ball,
tracks every run against the explicit a-priori bounds the scheme is built
around (entropy budget, density corridor, particle-path bounds, weak-form
residuals), and exports Eulerian profiles plus machine-checkable reports.
"""

__version__ = "0.1.0"

from .convexity import (
    ConvexFnId,
    EnvelopeParams,
    branch_inverse,
    convex_eval,
    envelope_bounds,
    omega_bounds,
)
from .eulerian import RadialProfile, eulerian_profile, pullback
from .family import (
    FamilyAborted,
    FamilyReport,
    PathFamily,
    estimate_vacuum_interface,
    holder_moduli,
    run_family,
)
from .initial_data import (
    ExteriorData,
    LagrangianData,
    RadialData,
    data_entropy_constant,
    generate_radial,
    load_radial_csv,
    mollify_extend,
    to_lagrangian,
    truncate_farfield,
)
from .monitors import entropy_series, standard_monitor_report
from .solver import (
    FluidParams,
    LagrangianState,
    RunAborted,
    SolverConfig,
    Trajectory,
    run,
)
from .weakform import residual_table, standard_test_functions, weak_residual

__all__ = [
    "ConvexFnId",
    "EnvelopeParams",
    "ExteriorData",
    "FamilyAborted",
    "FamilyReport",
    "FluidParams",
    "LagrangianData",
    "LagrangianState",
    "PathFamily",
    "RadialData",
    "RadialProfile",
    "RunAborted",
    "SolverConfig",
    "Trajectory",
    "branch_inverse",
    "convex_eval",
    "data_entropy_constant",
    "entropy_series",
    "envelope_bounds",
    "estimate_vacuum_interface",
    "eulerian_profile",
    "generate_radial",
    "holder_moduli",
    "load_radial_csv",
    "mollify_extend",
    "omega_bounds",
    "pullback",
    "residual_table",
    "run",
    "run_family",
    "standard_monitor_report",
    "standard_test_functions",
    "to_lagrangian",
    "truncate_farfield",
    "weak_residual",
    "__version__",
]
