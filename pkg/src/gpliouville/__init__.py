"""Numerical checks of the virial/Liouville reduction for dark solitons of the 1D Gross-Pitaevskii equation."""
from .backend import COMPILED_AVAILABLE, DEFAULT_BACKEND
from .grid import Grid
from .soliton import SolitonParams, build_profile, soliton_state

__version__ = "0.1.0"

__all__ = [
    "COMPILED_AVAILABLE",
    "DEFAULT_BACKEND",
    "Grid",
    "SolitonParams",
    "build_profile",
    "soliton_state",
    "__version__",
]
