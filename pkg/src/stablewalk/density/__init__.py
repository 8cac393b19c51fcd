"""Transition probabilities, stable densities and Fourier-split diagnostics."""
from .continuum import example1_pmf_asymptote, example1_pmf_quadrature
from .cutoff import CutoffFunction, CutoffSplit, RegimeParams, cutoff_split
from .pmf import PmfTable, alias_bound, pmf_fft, pmf_series
from .stable import (StableDensity, example3_density, radial_integral, self_similarity_check,
                     stable_density, stable_tail)

__all__ = [
    "CutoffFunction", "CutoffSplit", "PmfTable", "RegimeParams", "StableDensity",
    "alias_bound", "cutoff_split", "example1_pmf_asymptote", "example1_pmf_quadrature",
    "example3_density", "pmf_fft", "pmf_series", "radial_integral", "self_similarity_check",
    "stable_density", "stable_tail",
]
