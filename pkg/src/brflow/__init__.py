"""Exact best-response dynamics, equilibrium classification and probes for weighted potential games."""

from .analysis import (
    ClassificationError,
    ExperimentReport,
    ProjectionContext,
    basin_monte_carlo,
    finite_time_probe,
    genericity_census,
    inequality_probe,
    projection_context,
    projection_g,
    projection_map,
    reduced_game,
    sample_indifference_surface,
    tangency_probe,
    volume_contraction_probe,
)
from .equilibrium import (
    EquilibriumRecord,
    NotAnEquilibriumError,
    SolverOptions,
    classify_regularity,
    enumerate_pure_equilibria,
    find_equilibria,
    solve_mixed_equilibria,
    verify_equilibrium,
)
from .estimators import BestResponseDynamics, NashEquilibriumSolver
from .flow import (
    FlowOptions,
    Status,
    Trajectory,
    TrajectorySegment,
    best_response_target,
    classify_outcome,
    estimate_convergence_rate,
    euler_fictitious_play,
    integrate_trajectory,
    next_event_time,
    segment_state,
)
from .game import (
    Carrier,
    GameStructureError,
    NormalFormGame,
    NotPotentialGameError,
    PotentialDecomposition,
    best_response_set,
    carrier_of,
    expected_potential,
    expected_utility,
    from_simplex,
    infer_exact_potential,
    mixed_hessian,
    partial_potential,
    potential_gradient,
    to_simplex,
    verify_potential_decomposition,
)
from .io import load_game

__version__ = "0.1.0"
