"""Variational solver and verification suite for weighted anisotropic
p-Laplace problems with singular nonlinearities.

The package computes solutions of the regularized singular problems by
monotone truncation schemes, the best constant of the associated weighted
Sobolev-type inequality along two independent routes, and the normalized
extremal, together with sampled verification of the structural identities
behind each step.
"""

from .errors import ConfigError, ConvergenceError, GateError
from .norms import FinslerNorm, FluxParams, invariant_suite
from .spaces import (ExponentTable, IntegrabilityVerdict, WeightSpec,
                     admissible_power_range, exponent_table,
                     validate_data_integrability)
from .meshing import Field, Mesh, build_mesh, mesh_from_tag, weighted_energy
from .solver import (ProblemSpec, SolveReport, solve_exponential,
                     solve_frozen_load, solve_mixed, stampacchia_diagnostic)
from .extremal import (ExtremalReport, InequalityVerdict, build_extremal,
                       compute_extremal_report, mu_direct, mu_from_formula,
                       rayleigh_quotient, verify_inequality)
from .config import build_spec, load_config, parse_config_text

__all__ = [
    "ConfigError", "ConvergenceError", "GateError",
    "FinslerNorm", "FluxParams", "invariant_suite",
    "ExponentTable", "IntegrabilityVerdict", "WeightSpec",
    "admissible_power_range", "exponent_table", "validate_data_integrability",
    "Field", "Mesh", "build_mesh", "mesh_from_tag", "weighted_energy",
    "ProblemSpec", "SolveReport", "solve_exponential", "solve_frozen_load",
    "solve_mixed", "stampacchia_diagnostic",
    "ExtremalReport", "InequalityVerdict", "build_extremal",
    "compute_extremal_report", "mu_direct", "mu_from_formula",
    "rayleigh_quotient", "verify_inequality",
    "build_spec", "load_config", "parse_config_text",
]

__version__ = "0.1.0"
