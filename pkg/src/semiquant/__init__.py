"""Corrected semiclassical spectra and Sturmian thresholds for 1D wells."""

from .corrections import (
    delta1_closed,
    delta_class,
    delta_series,
    delta_two_param,
    small_parameter_b,
    sturmian_t,
)
from .errors import SemiquantError
from .oracle import (
    GridSolveConfig,
    closed_form_spectrum,
    grid_count,
    grid_eigensolve,
    threshold_U_oracle,
)
from .potentials import (
    ClassFiveSpec,
    Confining,
    PotentialModel,
    Well,
    build_class_five,
    catalog,
    from_table,
    from_table_file,
)
from .quadrature import (
    PhasePoint,
    action_phase,
    delta1_numeric,
    gamma_numeric,
    singular_moment,
    turning_points,
)
from .spectrum import (
    ClassExact,
    FirstOrder,
    Leading,
    LevelResult,
    TwoParameter,
    compare_modes,
    count_bound_states,
    solve_level,
    solve_spectrum,
)
from .sturmian import (
    SturmianFamily,
    ThresholdResult,
    class_family,
    perturbed_family,
    phase_at_edge,
    refined_delta_U,
    shape_factor_k,
    threshold_U,
    threshold_condition,
)

__version__ = "0.1.0"

__all__ = [
    "SemiquantError",
    "ClassFiveSpec",
    "PotentialModel",
    "Well",
    "Confining",
    "build_class_five",
    "catalog",
    "from_table",
    "from_table_file",
    "PhasePoint",
    "turning_points",
    "action_phase",
    "singular_moment",
    "delta1_numeric",
    "gamma_numeric",
    "delta1_closed",
    "delta_class",
    "delta_series",
    "delta_two_param",
    "sturmian_t",
    "small_parameter_b",
    "Leading",
    "FirstOrder",
    "ClassExact",
    "TwoParameter",
    "LevelResult",
    "solve_level",
    "solve_spectrum",
    "count_bound_states",
    "compare_modes",
    "SturmianFamily",
    "ThresholdResult",
    "class_family",
    "perturbed_family",
    "shape_factor_k",
    "phase_at_edge",
    "threshold_condition",
    "threshold_U",
    "refined_delta_U",
    "GridSolveConfig",
    "grid_eigensolve",
    "grid_count",
    "closed_form_spectrum",
    "threshold_U_oracle",
    "__version__",
]
