"""Concrete operators for integral equations, ODE systems and classical PDEs."""

from .heat import (heat_k1, heat_k2, heat_operator, heat_optimal_error, heat_solution,
                   ray_prefactor_shortcut, ray_time_integral)
from .integral import (ResolventTable, TruncationError, fredholm_resolvent, resolvent_l1_error,
                       resolvent_operator, solve_second_kind, volterra_resolvent)
from .ode import (check_metzler, exp_integral, is_metzler, matrix_exponential, ode_optimal_error,
                  ode_recovery, ode_solution)
from .poisson import (green_disk, poisson_cross_check, poisson_disk_error, poisson_disk_solution,
                      poisson_kernel_disk, poisson_operator)
from .wave import wave1d_kernel_operator, wave_fixed_time_error, wave_solution, wave_solution_and_error

__all__ = [
    "ResolventTable", "TruncationError", "check_metzler", "exp_integral", "fredholm_resolvent",
    "green_disk", "heat_k1", "heat_k2", "heat_operator", "heat_optimal_error", "heat_solution",
    "is_metzler", "matrix_exponential", "ode_optimal_error", "ode_recovery", "ode_solution",
    "poisson_cross_check", "poisson_disk_error", "poisson_disk_solution", "poisson_kernel_disk",
    "poisson_operator", "ray_prefactor_shortcut", "ray_time_integral", "resolvent_l1_error",
    "resolvent_operator", "solve_second_kind", "volterra_resolvent", "wave1d_kernel_operator",
    "wave_fixed_time_error", "wave_solution", "wave_solution_and_error",
]
