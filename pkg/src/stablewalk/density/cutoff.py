"""Splitting the Fourier integral for ``p(t, x)`` at the scale ``|k| ~ t^(-1/alpha)``.

With a smooth cutoff ``psi`` (1 on ``[0, 1]``, 0 beyond 2),

    I   = int_T exp(i k x - t omega(k)) (1 - psi(|k| t^(1/alpha))) dk,
    I_1 = (2 pi)^-d int_{|k| t^(1/alpha) < 2} exp(i k x - t omega(k)) psi(|k| t^(1/alpha)) dk,

where ``omega = 1 - ahat``, so ``I + (2 pi)^d I_1 = (2 pi)^d p(t, x)``.
``I`` is small in the large-deviation zone (it is bounded by
``C t^(-d/alpha) (t^(1/alpha)/|x|)^m`` with ``m = d + floor(alpha) + 1``),
and ``I_1`` carries the ``a0 t |x|^(-d-alpha)`` asymptote.

Only d = 1 is implemented.  ``I`` has a smooth periodic integrand (the cusp
of ``omega`` at 0 is removed by ``1 - psi``), so the trapezoid rule is
spectrally accurate and one FFT gives ``I`` at every ``x``; accuracy is
checked by doubling the grid.  ``I_1`` is a finite cosine-weighted integral
handled by QUADPACK's QAWO.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy.integrate import quad

from ..errors import ParameterError, QuadratureError
from ..spectral import _one_dim

DOUBLING_TOL = 1e-13


def _glue_exp(s):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0)), 0.0)


def _glue_exp2(s):
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(s > 0, np.exp(-1.0 / np.where(s > 0, s, 1.0) ** 2), 0.0)


_GLUES = {"exp": _glue_exp, "exp2": _glue_exp2}


@dataclass(frozen=True)
class CutoffFunction:
    """Smooth plateau ``psi``: 1 for ``|tau| <= 1``, 0 for ``|tau| >= 2``.

    ``psi(tau) = h(2 - |tau|) / (h(2 - |tau|) + h(|tau| - 1))`` with the glue
    ``h(s) = exp(-1/s)`` (``profile='exp'``) or ``exp(-1/s^2)`` (``'exp2'``).
    """

    profile: str = "exp"

    def __post_init__(self):
        if self.profile not in _GLUES:
            raise ParameterError(f"unknown cutoff profile {self.profile!r}; use one of {sorted(_GLUES)}")

    def __call__(self, tau):
        a = np.abs(np.asarray(tau, dtype=float))
        h = _GLUES[self.profile]
        up, down = h(2.0 - a), h(a - 1.0)
        denom = up + down
        return np.where(a <= 1.0, 1.0, np.where(a >= 2.0, 0.0, up / np.where(denom > 0, denom, 1.0)))


@dataclass(frozen=True)
class RegimeParams:
    """Exponents of the symbol residual and of the ``I`` bound.

    ``delta`` is the residual order gain (1 for alpha <= 1, else 2 - alpha),
    ``m = d + floor(alpha) + 1`` the number of integrations by parts.
    """

    d: int
    alpha: float

    @property
    def delta(self):
        return 1.0 if self.alpha <= 1.0 else 2.0 - self.alpha

    @property
    def m(self):
        return self.d + math.floor(self.alpha) + 1


@dataclass
class CutoffSplit:
    """Result of :func:`cutoff_split` at one ``(t, x)``."""

    t: float
    x: int
    I: float
    I1: float
    bound_I: float
    I_error: float
    I1_error: float

    @property
    def lemma_constant(self):
        """``|I| / bound_I``, the empirical constant in the ``I`` bound."""
        return abs(self.I) / self.bound_I


def _omega(kernel, k):
    stable, resid, _ = _one_dim(kernel, np.asarray(k, dtype=float))
    return stable - resid


def _I_grid(kernel, t, psi, N):
    k = 2.0 * np.pi * sfft.fftfreq(N)
    g = np.exp(-t * _omega(kernel, k)) * (1.0 - psi(np.abs(k) * t ** (1.0 / kernel.alpha)))
    # trapezoid: (2 pi / N) sum_j g(k_j) e^{i k_j x} = 2 pi ifft(g)[x]
    return 2.0 * np.pi * sfft.ifft(g).real


def cutoff_integral_I(kernel, t, x, psi, N=None):
    """``I`` at the integer points ``x`` with a doubling error estimate.

    Returns
    -------
    values, error : ndarray, float
    """
    x = np.atleast_1d(np.asarray(x, dtype=np.int64))
    xmax = int(np.max(np.abs(x)))
    if N is None:
        N = max(256, 1 << (4 * xmax + 4).bit_length())
    prev = _I_grid(kernel, t, psi, N)
    for _ in range(8):
        N *= 2
        cur = _I_grid(kernel, t, psi, N)
        err = float(np.max(np.abs(cur[x % N] - prev[x % (N // 2)])))
        if err <= DOUBLING_TOL:
            return cur[x % N], err
        prev = cur
    raise QuadratureError(f"trapezoid rule for I did not settle (last change {err:.3g})",
                          estimate=cur[x % N], achieved=err)


def cutoff_integral_I1(kernel, t, x, psi, epsabs=1e-16):
    """``I_1`` at a single integer ``x`` (d = 1) and the QUADPACK error estimate."""
    alpha = kernel.alpha
    kmax = 2.0 * t ** (-1.0 / alpha)

    def f(k):
        return math.exp(-t * float(_omega(kernel, np.array([k]))[0])) * float(psi(k * t ** (1.0 / alpha)))

    # the cusp of omega sits at k = 0; split off a short first piece
    edges = [0.0, min(kmax, 0.5 * t ** (-1.0 / alpha)), kmax]
    total, error = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        val, err, *info = quad(f, a, b, weight="cos", wvar=float(x), epsabs=epsabs, epsrel=1e-12,
                               limit=400, full_output=1)
        if len(info) > 1 and err > max(1e3 * epsabs, 1e-9 * abs(val)):
            raise QuadratureError(f"I1 quadrature: {info[1]}", estimate=val, achieved=err)
        total += val
        error += err
    return total / math.pi, error / math.pi


def cutoff_split(kernel, t, x, psi=None):
    """Evaluate ``I``, ``I_1`` and the bound ``t^((m-d)/alpha) / |x|^m`` (d = 1).

    Parameters
    ----------
    kernel : JumpKernel
        One-dimensional kernel.
    t : float
        Positive time with ``2 t^(-1/alpha) <= pi`` (cutoff inside the torus).
    x : int or sequence of int
        Nonzero lattice points.
    psi : CutoffFunction, optional

    Returns
    -------
    list of CutoffSplit
    """
    if kernel.d != 1:
        raise ParameterError("cutoff_split is implemented for d = 1")
    t = float(t)
    if not t > 0:
        raise ParameterError("cutoff_split needs t > 0")
    if 2.0 * t ** (-1.0 / kernel.alpha) > math.pi:
        raise ParameterError(f"t={t} too small: the cutoff support 2 t^(-1/alpha) exceeds pi")
    psi = psi or CutoffFunction()
    xs = np.atleast_1d(np.asarray(x, dtype=np.int64)).ravel()
    if np.any(xs == 0):
        raise ParameterError("cutoff_split needs x != 0")
    rp = RegimeParams(1, kernel.alpha)
    I, I_err = cutoff_integral_I(kernel, t, xs, psi)
    out = []
    for xi, Ii in zip(xs, I):
        I1, I1_err = cutoff_integral_I1(kernel, t, int(xi), psi)
        bound = t ** ((rp.m - 1) / kernel.alpha) / abs(int(xi)) ** rp.m
        out.append(CutoffSplit(t, int(xi), float(Ii), I1, bound, I_err, I1_err))
    return out
