"""Simulation of homodyne quadrature data and neural-network nonclassicality classification."""

from .states import ClassLabel, Family, StateSpec, density, density_grid, tail_mass

__version__ = "0.1.0"

__all__ = [
    "ClassLabel",
    "Family",
    "StateSpec",
    "density",
    "density_grid",
    "tail_mass",
]
