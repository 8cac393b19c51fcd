"""Numerical lab for symmetric heavy-tailed continuous-time random walks on Z^d.

Modules
-------
kernel
    Normalised jump kernels ``a(z) ~ a0(z/|z|) |z|^(-d-alpha)``.
spectral
    The characteristic function ``ahat`` and its stable approximation.
density
    Transition probabilities (FFT, Poisson series), stable densities and
    Fourier-split diagnostics.
walker
    Exact path sampling and Monte Carlo histograms.
limits
    Reports comparing ``p(t, x)`` with its central and large-deviation limits.
cli
    The ``stablewalk`` command.
"""
from .errors import (IntegrityError, ParameterError, QuadratureError, StableWalkError,
                     ToleranceError, ValidationError)
from .kernel import AngularDensity, JumpKernel, build_kernel, cached_kernel, load_kernel_config
from .spectral import StableSymbol, char_fn, one_minus_ahat, spectral_gap
from .density import (CutoffFunction, PmfTable, StableDensity, cutoff_split, pmf_fft,
                      pmf_series, stable_density, stable_tail)
from .walker import EmpiricalPmf, build_sampler, estimate_pmf, simulate_endpoint
from .limits import RegimeReport, central_report, large_deviation_report, lemma_bounds_report

__version__ = "0.1.0"

__all__ = [
    "AngularDensity", "CutoffFunction", "EmpiricalPmf", "IntegrityError", "JumpKernel",
    "ParameterError", "PmfTable", "QuadratureError", "RegimeReport", "StableDensity",
    "StableSymbol", "StableWalkError", "ToleranceError", "ValidationError", "build_kernel",
    "build_sampler", "cached_kernel", "central_report", "char_fn", "cutoff_split",
    "estimate_pmf", "large_deviation_report", "lemma_bounds_report", "load_kernel_config",
    "one_minus_ahat", "pmf_fft", "pmf_series", "simulate_endpoint", "spectral_gap",
    "stable_density", "stable_tail",
]
