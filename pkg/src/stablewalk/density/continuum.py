"""Closed forms for the continuum walk with jump density ``sin(r)^4 / (pi^2 r^4)`` on R^3.

The jump law has the compactly supported characteristic function
:func:`~stablewalk.spectral.example1_charfn`, which behaves like
``1 - 3|k|/8`` near zero (alpha = 1) but is only C^1 in ``k``.  The
transition density away from the origin is

    p(t, r) = (2 pi^2 r)^-1 int_0^4 kappa sin(kappa r) (exp(t (ahat(kappa) - 1)) - exp(-t)) dkappa

(the atom ``exp(-t) delta(x)`` of paths without jumps is removed), and its
large-``r`` behaviour oscillates instead of following the stable law.
"""
import math

import numpy as np
from scipy.integrate import quad

from ..errors import ParameterError, QuadratureError
from ..spectral import example1_charfn


def example1_pmf_asymptote(t, r):
    """``t / (pi^2 r^4) [3/8 - cos(2r) exp(-3t/4) / 2 + cos(4r) exp(-t) / 8]``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterError("r must be positive")
    bracket = 0.375 - 0.5 * np.cos(2 * r) * np.exp(-0.75 * t) + 0.125 * np.cos(4 * r) * np.exp(-t)
    return t / (math.pi**2 * r**4) * bracket


def example1_pmf_quadrature(t, r, epsabs=1e-18):
    """Transition density at distance ``r > 0`` by radial Fourier quadrature.

    The profile ``exp(t (ahat - 1))`` has kinks at ``kappa = 2`` and 4, so
    the sine-weighted (QAWO) integral is split there.

    Returns
    -------
    value, error : float
    """
    t, r = float(t), float(r)
    if r <= 0:
        raise ParameterError("r must be positive")

    def g(kappa):
        return kappa * (math.exp(t * (float(example1_charfn(kappa)) - 1.0)) - math.exp(-t))

    total, error = 0.0, 0.0
    for a, b in [(0.0, 2.0), (2.0, 4.0)]:
        val, err, *info = quad(g, a, b, weight="sin", wvar=r, epsabs=epsabs, epsrel=1e-13,
                               limit=500, full_output=1)
        if len(info) > 1 and err > 1e-8 * abs(val):
            raise QuadratureError(f"Example 1 quadrature at r={r}: {info[1]}", estimate=val, achieved=err)
        total += val
        error += err
    norm = 1.0 / (2.0 * math.pi**2 * r)
    return total * norm, error * norm
