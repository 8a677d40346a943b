"""Planar Kirchhoff rod dynamics with a semi-analytic integration scheme."""

from .errors import (
    BracketError,
    ConfigurationError,
    DegeneracyError,
    DivergenceError,
    DomainError,
    InputError,
    InstabilityError,
    NumericalError,
    OutOfRangeError,
    RodSimError,
    SingularSystemError,
    SizeError,
)
from .grid_fields import (
    Grid1D,
    SampledFn,
    central_diff,
    cumtrapz,
    find_root,
    integrate_ode_rk4,
    solve_block_tridiag,
)
from .integrators import (
    ManifoldState,
    StepReport,
    lift,
    max_stable_dt,
    project,
    step_pure_numeric,
    step_semi_analytic,
)
from .reduction import (
    SpaceTimeField,
    developable_residuals,
    extract_speed_profile,
    potential_system_residuals,
    reconstruct_potentials,
)
from .rod_model import (
    BoundaryConditions,
    Loads,
    MaterialParams,
    RodState,
    bending_couple,
    energy,
    reconstruct_centerline,
    solve_contact_force,
)
from .scenarios import (
    ScenarioConfig,
    Trajectory,
    benchmark_stability,
    default_config,
    run_carpet,
    run_cilium,
    run_scenario,
)
from .solution_family import (
    CauchyTrace,
    SolutionFamily,
    evaluate_family,
    family_from_json,
    family_to_json,
    invert_time,
    match_boundary_trace,
    parameter_free_residuals,
    random_family,
    random_trace,
    sample_state,
    verify_trace_match,
)

__version__ = "0.1.0"
