"""vortexlab: a numerical laboratory for the vanishing-viscosity limit on the unit disk.

The package simulates circularly symmetric Navier-Stokes flow at a schedule of
shrinking viscosities, recovers velocity from vorticity through the disk's
Dirichlet kernels, and checks quantitatively that the computed flows behave
like a weak Euler solution in the limit: interior weak-form residuals vanish,
concentration diagnostics stay controlled, and the near-boundary vorticity
splits into a signed heat part plus collar terms with explicit bounds.
"""

__version__ = "0.1.0"

from .bumps import make_cutoff, make_mollifier, make_test_function
from .config import DEFAULTS, ExperimentConfig, default_config, load_config
from .diagnostics import (
    CompactSubdomain,
    build_convergence_report,
    l1_on_compact,
    maximal_function_curve,
    summarize_assumptions,
    weak_star_l2_distance,
)
from .errors import (
    CoincidentPointsError,
    ConfigError,
    DegenerateFitError,
    DomainError,
    ProjectionConditioningWarning,
    QuadratureError,
    ResolutionError,
    SeparationError,
    StageError,
    SupportError,
    TrajectoryFormatError,
)
from .heat import bounds_table, free_part_report, heat_decomposition
from .kernels import (
    biot_savart_kernel,
    green_function,
    symmetrized_advection_kernel,
    velocity_from_vorticity,
)
from .pipeline import STAGES, run, verify_trajectory_file, write_kernel_csv
from .radial import (
    SHEET_RADIUS,
    ModeExpansion,
    RadialField,
    RadialGrid,
    SheetFamily,
    Trajectory,
    build_sheet_family,
    default_mode_count,
    evolve,
    project_modes,
    sheet_limit_swirl,
    time_samples,
)
from .trajio import (
    load_trajectory_binary,
    load_trajectory_csv,
    save_trajectory_binary,
    save_trajectory_csv,
)
from .weakform import (
    generate_battery,
    generate_test_field,
    velocity_weak_residual,
    verify_battery,
    verify_pair,
    vorticity_interior_residual,
)

__all__ = [
    "__version__",
    "CoincidentPointsError",
    "ConfigError",
    "DegenerateFitError",
    "DomainError",
    "ProjectionConditioningWarning",
    "QuadratureError",
    "ResolutionError",
    "SeparationError",
    "StageError",
    "SupportError",
    "TrajectoryFormatError",
    "DEFAULTS",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "STAGES",
    "run",
    "verify_trajectory_file",
    "write_kernel_csv",
    "SHEET_RADIUS",
    "ModeExpansion",
    "RadialField",
    "RadialGrid",
    "SheetFamily",
    "Trajectory",
    "build_sheet_family",
    "default_mode_count",
    "evolve",
    "project_modes",
    "sheet_limit_swirl",
    "time_samples",
    "green_function",
    "biot_savart_kernel",
    "symmetrized_advection_kernel",
    "velocity_from_vorticity",
    "make_cutoff",
    "make_mollifier",
    "make_test_function",
    "generate_battery",
    "generate_test_field",
    "velocity_weak_residual",
    "vorticity_interior_residual",
    "verify_pair",
    "verify_battery",
    "CompactSubdomain",
    "l1_on_compact",
    "maximal_function_curve",
    "weak_star_l2_distance",
    "build_convergence_report",
    "summarize_assumptions",
    "bounds_table",
    "free_part_report",
    "heat_decomposition",
    "save_trajectory_binary",
    "load_trajectory_binary",
    "save_trajectory_csv",
    "load_trajectory_csv",
]
