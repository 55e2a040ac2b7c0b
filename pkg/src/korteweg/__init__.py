"""Spectral toolkit for compressible Navier-Stokes-Korteweg flows with heat conduction.

Littlewood-Paley blocks and hybrid Besov norms, the linearized dispersion
and stability theory, the capillary and nonlinear terms, and an
exponential time-differencing solver on periodic grids.
"""
from .besov import HybridIndex, TimeSeries, besov_norm, chemin_lerner_norm, hybrid_norm
from .dyadic import DyadicDecomposition, dyadic_block, low_cutoff
from .errors import (
    ArgumentError,
    ConfigError,
    DomainError,
    KortewegError,
    ModelError,
    RangeError,
    SolverError,
)
from .linear import LinearCoeffs, StabilityReport, classify_stability, from_equilibrium
from .physics import Coefficient, EquilibriumModel, FlowState
from .solver import SolverConfig, Trajectory, simulate
from .spectral import GridSpec, SpectralField

__version__ = "0.1.0"

__all__ = [
    "ArgumentError",
    "Coefficient",
    "ConfigError",
    "DomainError",
    "DyadicDecomposition",
    "EquilibriumModel",
    "FlowState",
    "GridSpec",
    "HybridIndex",
    "KortewegError",
    "LinearCoeffs",
    "ModelError",
    "RangeError",
    "SolverConfig",
    "SolverError",
    "SpectralField",
    "StabilityReport",
    "TimeSeries",
    "Trajectory",
    "besov_norm",
    "chemin_lerner_norm",
    "classify_stability",
    "dyadic_block",
    "from_equilibrium",
    "hybrid_norm",
    "low_cutoff",
    "simulate",
]
