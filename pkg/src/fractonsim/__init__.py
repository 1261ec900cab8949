"""Monte Carlo and exact tools for dipole-conserving spin-1 chains.

Charge and dipole conserving automaton dynamics, exhaustive symmetry
sectors and Krylov fragments, the maximum-entropy profile, the block
(height-field) picture, and closed-form stationary states of fractons.
"""
__version__ = "0.1.0"

from .analytic import TwoFractonGeometry, single_fracton_final, two_fracton_final_profile
from .automaton import EnsembleResult, EvolutionConfig, measure_tau, run_ensemble
from .chain import ChargeProfile, HeightField, SectorLabel, SpinState
from .errors import FractonSimError, NumericalError, ValidationError
from .gates import build_class_table
from .maxent import LagrangeMultipliers, solve_multipliers
from .scaling import PowerLawFit, powerlaw_fit, tau_sweep
from .sectors import enumerate_sector, krylov_decompose

__all__ = [
    "ChargeProfile",
    "EnsembleResult",
    "EvolutionConfig",
    "FractonSimError",
    "HeightField",
    "LagrangeMultipliers",
    "NumericalError",
    "PowerLawFit",
    "SectorLabel",
    "SpinState",
    "TwoFractonGeometry",
    "ValidationError",
    "build_class_table",
    "enumerate_sector",
    "krylov_decompose",
    "measure_tau",
    "powerlaw_fit",
    "run_ensemble",
    "single_fracton_final",
    "solve_multipliers",
    "tau_sweep",
    "two_fracton_final_profile",
]
