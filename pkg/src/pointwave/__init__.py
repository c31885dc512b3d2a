"""Exact solutions for a 1D string with pin or damper point interactions,
with a finite-difference oracle and a scenario CLI."""

from .dalembert import (
    Coupling,
    InitialData,
    ModelConfig,
    Piece,
    PositionFunction,
    free_field,
    free_trace,
    reconstruct_field,
)
from .models import (
    ForcePair,
    SolutionBundle,
    solve,
    solve_pin_damper,
    solve_single_damper,
    solve_single_pin,
    solve_two_dampers,
    solve_two_dampers_equal_gamma,
    solve_two_pins,
    unroll_recursion,
)
from .operators import RetardedOp, compose_power, delayed_cosh, delayed_exp, delayed_sinh, geometric_resolvent
from .signal import InsufficientHorizon, PolyExpTerm, Segment, Signal

__version__ = "0.1.0"
