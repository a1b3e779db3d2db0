"""Interval observer that bounds both the state and an unknown input of a
nonlinear discrete-time system with bounded noise."""

from .errors import (
    DimensionError,
    DomainViolationError,
    EmptyIntersectionError,
    EstimationError,
    ExprSyntaxError,
    InfeasibleError,
    InvalidInputError,
    ModelInconsistencyError,
    RankDeficiencyError,
    SimulationDivergedError,
    SisioError,
)
from .interval import IntervalVector, MatrixSplit, affine_image_bounds, hull, intersect, split_pos, width
from .lp import LinearProgram, lp_solve, residual_box_hull
from .mixed_monotone import (
    Decomposition,
    JacobianBounds,
    build_decomposition,
    decomposition_lipschitz,
    estimate_jacobian_bounds,
    estimate_lipschitz,
)
from .observer import ObserverState, SystemModel, init, input_estimate, residual_bounds, run, state_propagate, step
from .stability import (
    StabilityCertificate,
    check_condition_i,
    check_condition_ii,
    check_condition_iii,
    nsd_test,
    width_limits,
)

__version__ = "0.1.0"
