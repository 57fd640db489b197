"""Hashing sketches and sketch-preconditioned LSQR for linear least squares."""

from .kernels import CpqrFactors, NumericalError, RankZeroError, SvdFactors
from .sketch import SketchSpec, apply_sketch, realize
from .solver import SolveResult, SolverConfig, solve

__all__ = [
    "CpqrFactors",
    "NumericalError",
    "RankZeroError",
    "SketchSpec",
    "SolveResult",
    "SolverConfig",
    "SvdFactors",
    "apply_sketch",
    "realize",
    "solve",
]
__version__ = "0.1.0"
