"""One-dimensional elastic-plastic flow on adaptive moving meshes.

Third-order cell-centred finite volumes with WENO3 characteristic
reconstruction, a two-rarefaction Riemann solver for Mie-Grueneisen solids
with hypoelastic stress and von Mises yielding, and MMPDE mesh adaptation.
"""
from ._jit import backend, set_backend
from .eos import ALUMINIUM, COPPER, MaterialModel, PrimitiveState
from .errors import (ConfigError, DomainMismatch, EpflowError, MeshTangled, NoConvergence,
                     NonPhysicalState, SolverError, SolverFailure)
from .integrator import BoundarySide, BoundarySpec, ConservedCell, Simulation

__version__ = "0.1.0"

__all__ = [
    "ALUMINIUM", "COPPER", "BoundarySide", "BoundarySpec", "ConfigError", "ConservedCell",
    "DomainMismatch", "EpflowError", "MaterialModel", "MeshTangled", "NoConvergence",
    "NonPhysicalState", "PrimitiveState", "Simulation", "SolverError", "SolverFailure",
    "backend", "set_backend",
]
