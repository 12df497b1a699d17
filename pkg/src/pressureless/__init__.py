"""Entropy solutions of the 1-D pressureless Euler system with damping.

The solver evaluates the solution fields through a generalized-potential
variational formula for measure initial data (point masses plus uniform
blocks), validates itself against event-driven sticky-particle dynamics,
and reproduces the zero-relaxation and vanishing-damping limits.
"""

from .measure import (
    Atom,
    Block,
    InitialData,
    Piece,
    atom,
    block,
    build_initial,
    cdf,
    initial_from_json,
    load_initial,
    stieltjes,
)
from .potential import (
    MinimizerSelection,
    PotentialProfile,
    SpreadMode,
    build_profile,
    damped,
    minimize_profile,
    potential_value,
    scaled,
    select_at,
    select_minimizers,
    spread,
    undamped,
)
from .solution import (
    ExtractionError,
    SolutionSample,
    extract_measure,
    mass_at,
    momentum_at,
    sample_at,
    sample_grid,
    velocity_at,
)
from .sticky import ParticleState, discretize, evolve, oracle_cdf
from .limits import (
    LimitStudyReport,
    scaled_solution,
    vanishing_damping_study,
    w1_distance,
    zero_relaxation_study,
)
from .verify import (
    TestFunction,
    Window,
    bump,
    initial_trace_check,
    monotonicity_check,
    oleinik_check,
    plateau,
    run_battery,
    weak_residual,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
