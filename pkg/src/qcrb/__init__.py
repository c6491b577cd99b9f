"""Cramer-Rao type bounds for qubit and displaced thermal state families."""

__version__ = "0.1.0"

from .bounds import compute_bounds, qubit_attainable_C, rld_bound_closed, rld_bound_oracle
from .families import StateFamily, eval_derivs, eval_state, extend_iid
from .infogeo import classical_fisher, rld_fisher, sld_fisher, solve_rld, solve_sld
from .povmopt import Povm, inner_value, optimize, random_povm

__all__ = [
    "Povm",
    "StateFamily",
    "classical_fisher",
    "compute_bounds",
    "eval_derivs",
    "eval_state",
    "extend_iid",
    "inner_value",
    "optimize",
    "qubit_attainable_C",
    "random_povm",
    "rld_bound_closed",
    "rld_bound_oracle",
    "rld_fisher",
    "sld_fisher",
    "solve_rld",
    "solve_sld",
]
