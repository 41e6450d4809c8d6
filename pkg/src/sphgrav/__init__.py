"""Staggered Lax-Friedrichs scheme with exact Riemann fans for spherically
symmetric isothermal Euler-Poisson flow outside the unit ball, with runtime
diagnostics of its bounds and entropy inequalities."""

from .diagnostics import Diagnostics, DiagnosticsReport, monitor_bounds
from .entropy import EntropyPair, mechanical_entropy, weak_entropy_pair
from .errors import (
    CFLViolation,
    ConfigError,
    DomainError,
    InvariantViolation,
    RootFindingError,
    SphGravError,
)
from .riemann import WaveFan, cell_average, sample, solve_boundary_riemann, solve_riemann
from .scheme import CellArray, SchemeConfig, init_cells, run, step
from .state import PhysicalState, State, from_weighted, riemann_invariants, to_weighted

__all__ = [
    "CFLViolation",
    "CellArray",
    "ConfigError",
    "Diagnostics",
    "DiagnosticsReport",
    "DomainError",
    "EntropyPair",
    "InvariantViolation",
    "PhysicalState",
    "RootFindingError",
    "SchemeConfig",
    "SphGravError",
    "State",
    "WaveFan",
    "cell_average",
    "from_weighted",
    "init_cells",
    "mechanical_entropy",
    "monitor_bounds",
    "riemann_invariants",
    "run",
    "sample",
    "solve_boundary_riemann",
    "solve_riemann",
    "step",
    "to_weighted",
    "weak_entropy_pair",
]
