"""Unit commitment by Lagrangian pricing, dynamic-programming repair and
LP feasibility testing."""

from .driver import SolveResult, compute_cost, solve_dplr
from .model import (GeneratingUnit, LoadProfile, Multipliers, Schedule, SolverConfig, TransmissionLine,
                    UcInstance, validate_instance)

__all__ = ["GeneratingUnit", "LoadProfile", "Multipliers", "Schedule", "SolveResult", "SolverConfig",
           "TransmissionLine", "UcInstance", "compute_cost", "solve_dplr", "validate_instance"]
