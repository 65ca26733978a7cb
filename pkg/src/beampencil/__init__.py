"""Spectral analysis of the fourth-order pencil ``(p y'')'' = lam(-y'' + c r y)`` on [0, 1]."""

from .assembly import assemble_pencil, solve_model_bvp
from .eigen import compute_spectrum, inertia_index, reconstruct_eigenfunction
from .kernels import BACKEND
from .oscillation import count_sign_changes, disconjugacy_check, locate_zeros, signchange_noninc_check
from .problem import BoundaryKind, CoefficientField, ConfigError, Mesh, ProblemSpec, RunOptions, load_problem
from .sturm import admissible_sup, sigma_solution, sl_negative_count, transform_pencil
from .verify import Tolerances, run_verification

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BoundaryKind", "CoefficientField", "ConfigError", "Mesh", "ProblemSpec", "RunOptions",
    "Tolerances", "admissible_sup", "assemble_pencil", "compute_spectrum", "count_sign_changes",
    "disconjugacy_check", "inertia_index", "load_problem", "locate_zeros", "reconstruct_eigenfunction",
    "run_verification", "sigma_solution", "signchange_noninc_check", "sl_negative_count",
    "solve_model_bvp", "transform_pencil",
]
