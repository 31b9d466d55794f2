"""Exact propagators and wave functions of time-dependent quadratic Hamiltonians."""
from . import classical, kernel, observables, oracle, scenario, states
from ._accel import BACKEND
from .classical import ClassicalBasis, shift_basis, solve_particular, standard_basis
from .errors import (AnchorError, CausticError, DegenerateBasisError, DomainError,
                     NumericalError, QuadpropError, ValidationError)
from .kernel import Propagator, propagate
from .scenario import Scenario, preset
from .states import StateSpec, psi, wavefunctions

__version__ = "0.1.0"

__all__ = ["BACKEND", "AnchorError", "CausticError", "ClassicalBasis", "DegenerateBasisError",
           "DomainError", "NumericalError", "Propagator", "QuadpropError", "Scenario", "StateSpec",
           "ValidationError", "classical", "kernel", "observables", "oracle", "preset", "propagate",
           "psi", "scenario", "shift_basis", "solve_particular", "standard_basis", "states",
           "wavefunctions"]
