"""Optimal recovery of positive integral operators on Hoelder-type classes."""

from .domains import Box, Circle, Disk, Interval, QuadratureGrid, SpacetimeBox
from .errors import (ConfigurationError, DomainError, InconsistentDataError, InputError, NumericalError,
                     PositivityError, PreconditionError, RecoveryError, UnsupportedError)
from .modulus import ModulusSpec, eval_modulus, validate_modulus
from .operators import (ErrorReport, Identity, KernelOp, OperatorMatrix, OpSum, PsiNorm, identity_problem,
                        optimal_error, psi_norm, recovered_solution)
from .recovery import InfoSpec, RecoveryMethod

__version__ = "0.1.0"

__all__ = [
    "Box", "Circle", "ConfigurationError", "Disk", "DomainError", "ErrorReport", "Identity",
    "InconsistentDataError", "InfoSpec", "InputError", "Interval", "KernelOp", "ModulusSpec",
    "NumericalError", "OpSum", "OperatorMatrix", "PositivityError", "PreconditionError", "PsiNorm",
    "QuadratureGrid", "RecoveryError", "RecoveryMethod", "SpacetimeBox", "UnsupportedError",
    "eval_modulus", "identity_problem", "optimal_error", "psi_norm", "recovered_solution", "validate_modulus",
]
