"""Nonlinear bifurcations from Dirac points of honeycomb Schroedinger operators."""
from .lattice import LatticeBasis, IndexSet, build_index_set
from .fields import BlochField, RealGrid
from .nonlinearity import HoneycombPotential, NonlinearityModel, standard_potential
from .linear_spectrum import SpectralBasis, linear_basis
from .perturbation import PerturbationReport, complex_interaction
from .problem import DiracProblem, build_problem
from .bootstrap_solver import (BootstrapConfig, ModeResult, ParameterPair, bootstrap_equator,
                               bootstrap_polar, find_bifurcation_modes)

__version__ = "0.1.0"

__all__ = [
    "LatticeBasis", "IndexSet", "build_index_set", "BlochField", "RealGrid",
    "HoneycombPotential", "NonlinearityModel", "standard_potential", "SpectralBasis",
    "linear_basis", "PerturbationReport", "complex_interaction", "DiracProblem",
    "build_problem", "BootstrapConfig", "ModeResult", "ParameterPair", "bootstrap_equator",
    "bootstrap_polar", "find_bifurcation_modes",
]
