"""Mean-field Blume-Capel model: equilibrium phase structure, exact lumped
Glauber chain and Monte Carlo couplings."""

from __future__ import annotations

__version__ = "0.1.0"

from .equilibrium import BETA_C, DomainError, SolverError, classify, k1, kc1, kc2, minimize_g, wc
from .exactchain import CapExhausted, gibbs_stationary, glauber_lumped_matrix, t_mix_exact
from .params import ModelParams
from .rng import RngStream

__all__ = [
    "__version__",
    "BETA_C",
    "CapExhausted",
    "DomainError",
    "ModelParams",
    "RngStream",
    "SolverError",
    "classify",
    "gibbs_stationary",
    "glauber_lumped_matrix",
    "k1",
    "kc1",
    "kc2",
    "minimize_g",
    "t_mix_exact",
    "wc",
]
