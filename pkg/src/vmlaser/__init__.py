"""Reduced 1D Vlasov-Maxwell laser-plasma simulator.

Semi-Lagrangian characteristic transport coupled to Ampere and explicit
Duhamel wave updates, iterated to a fixed point, with conservation,
equilibrium, and stability diagnostics.
"""

__version__ = "0.1.0"

from .phase_space import NR, QR, DistSlice, ModelVariant, PhaseGrid
from .fixed_point import GlobalSolution, SolverConfig, solve

__all__ = ["NR", "QR", "DistSlice", "ModelVariant", "PhaseGrid",
           "GlobalSolution", "SolverConfig", "solve", "__version__"]
