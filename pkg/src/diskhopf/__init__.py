"""Equivariant Hopf bifurcations of delayed two-species reaction-diffusion systems on a disk."""
from .bessel_basis import EigenMode, eigen_table, mode_integrals, mode_of, neumann_roots, normalized_eigenfunction
from .model import ModelSpec, TaylorData, builtin, find_equilibrium, taylor_expand
from .normal_form import NormalFormResult, StandardHopfResult, classify, normal_form, standard_hopf_n0
from .simulator import PolarGrid, Simulator, classify_wave, initial_condition, run
from .spectrum import HopfPoint, bifurcation_curves, count_unstable_roots, hopf_points, min_hopf

__version__ = "0.1.0"

__all__ = [
    "EigenMode", "eigen_table", "mode_integrals", "mode_of", "neumann_roots", "normalized_eigenfunction",
    "ModelSpec", "TaylorData", "builtin", "find_equilibrium", "taylor_expand",
    "NormalFormResult", "StandardHopfResult", "classify", "normal_form", "standard_hopf_n0",
    "PolarGrid", "Simulator", "classify_wave", "initial_condition", "run",
    "HopfPoint", "bifurcation_curves", "count_unstable_roots", "hopf_points", "min_hopf",
]
