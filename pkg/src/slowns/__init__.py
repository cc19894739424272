"""Two-scale compressible Navier-Stokes toolkit.

Solvers for the parameterized 1D limit system and the full 2D isentropic
system, the slowly varying approximate solution and its remainder, and
checks of the decay, density-bound and functional-inequality estimates.
"""

from .model import FluidParams, InitialDataSpec, make_initial_data

__version__ = "0.1.0"
__all__ = ["FluidParams", "InitialDataSpec", "make_initial_data", "__version__"]
