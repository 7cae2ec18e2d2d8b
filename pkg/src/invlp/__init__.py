"""Data-driven approximation of maximum positively and controlled invariant sets.

A value function is fitted to one-step transition data by a single linear
program; its zero sublevel set approximates the invariant set.
"""

__version__ = "0.1.0"

from .basis import MonomialBasis, ThinPlateBasis, generate_rbf_centers, unisolvency_check
from .dynamics import SystemSpec, TransitionDataset, generate_dataset, mpi_oracle, rollout_value
from .geometry import Ball, Box, TransformedBox, set_from_dict
from .invariant import FitConfig, ValueModel, fit
from .lp import assemble_problem, solve_lp
from .metrics import estimate_metrics

__all__ = [
    "Ball", "Box", "TransformedBox", "set_from_dict",
    "SystemSpec", "TransitionDataset", "generate_dataset", "mpi_oracle", "rollout_value",
    "MonomialBasis", "ThinPlateBasis", "generate_rbf_centers", "unisolvency_check",
    "assemble_problem", "solve_lp", "FitConfig", "ValueModel", "fit", "estimate_metrics",
]
