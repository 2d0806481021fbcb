"""Radial pseudospectral simulator and diagnostics for the defocusing mass-critical NLS."""
from .grid import RadialField, RadialGrid, build_grid, integrate, weighted_lp_norm

__version__ = "0.1.0"

__all__ = ["RadialField", "RadialGrid", "build_grid", "integrate", "weighted_lp_norm"]
