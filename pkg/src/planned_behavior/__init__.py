"""Hybrid ODE/threshold model of planned behavior.

Individuals hold an intention that drifts under attitude, perceived social
norm and perceived control, act when it crosses a threshold, and emit a
decaying nudge that feeds the others' norm.  The package provides an
event-driven simulator for any number of individuals, the closed-form theory
of the two-individual case, and grid sweeps that compare the two.
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    DomainError,
    GlobalParams,
    IndividualConfig,
    NoPeriodError,
    ParameterError,
    SystemState,
    TwoBodyConstants,
    apply_reset,
    first_action_time,
    gamma,
    margin,
    tanh_solution,
    two_body_solution,
    vector_field,
)
from .lambertw import lambert_w  # noqa: E402
from .analytic import (  # noqa: E402
    FULL_ACTION,
    NO_ACTION,
    PARTIAL_ACTION,
    UNDETERMINED,
    ActionBounds,
    Classification,
    action_bounds,
    classify_two,
    fixed_point_xstar,
    invariant_M,
    map_f,
    min_alpha1_bisect,
    min_alpha1_for_action_B0,
    t_crit,
)
from .simulate import (  # noqa: E402
    ActionEvent,
    SimConfig,
    SimulationError,
    Trajectory,
    default_config,
    empirical_classify,
    simulate,
    simulate_and_classify,
)
from .sweep import (  # noqa: E402
    FIG6_PARAMS,
    AxisRange,
    SweepResult,
    SweepSpec,
    run_sweep,
    trace_boundary_M0,
)
