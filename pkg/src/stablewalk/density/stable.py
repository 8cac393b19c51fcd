"""Multivariate symmetric stable densities.

``S(y) = (2 pi)^-d int exp(i (k, y) - b0(khat) |k|^alpha) dk``.  In polar
coordinates ``k = r khat``,

    S(y) = (2 pi)^-d int_{S^(d-1)} J((khat, y), b0(khat)) dS(khat),
    J(w, b) = int_0^inf r^(d-1) cos(w r) exp(-b r^alpha) dr.

The radial integral is oscillatory with weak damping when ``alpha`` is
small.  It is computed on the ray ``r = u exp(i theta)`` in the upper
half-plane: the oscillating factor turns into ``exp(-w u sin(theta))`` and
the damping keeps a positive real part as long as ``alpha theta < pi/2``.
The tilt grows with ``w b^(-1/alpha)`` so small arguments stay on the real
axis.  Along the ray the integrand is smooth and decays exponentially, and
tanh-sinh quadrature converges fast.

For d >= 2 the direction integral is peaked where ``khat`` is orthogonal to
``y`` (``J`` decays like ``|w|^(-d-alpha)``).  The outer integral is split so
that peak sits at an endpoint, where tanh-sinh nodes cluster.

For large ``w b^(-1/alpha)`` the ray integrand is O(1) while the value is
O(w^(-d-alpha)), so roundoff would dominate when alpha > 1 (the tilt is then
capped).  There the Fourier-integral expansion

    J(w, b) ~ sum_n (-b)^n / n! Gamma(d + n alpha) cos(pi (d + n alpha) / 2) w^(-d - n alpha)

is used instead, truncated at its smallest term, which certifies the error.
"""
import logging
import math

import numpy as np
from scipy.integrate import tanhsinh
from scipy.special import gammaln

from .. import sphere
from ..errors import ParameterError, QuadratureError
from ..spectral import StableSymbol, _check_alpha

LOGGER = logging.getLogger(__name__)

RADIAL_RTOL = 1e-11
# absolute floor relative to the natural size scale^d of the radial integral;
# for alpha > 1 the tilt is limited and far-tail values cancel against O(1) terms
RADIAL_ATOL = 1e-13
SERIES_TERMS = 40
SERIES_RTOL = 1e-14
ANGULAR_RTOL = 1e-10
ANGULAR_ATOL = 1e-11
AZIMUTH_NODES = 64


def _tilt(alpha):
    return 0.5 * math.pi if alpha < 1 else 0.45 * math.pi / alpha


def _ray_integrand(s, omega, beta, theta, scale, d, alpha):
    u = s * scale
    rot = np.exp(1j * theta)
    z = (np.exp(1j * d * theta) * u ** (d - 1)
         * np.exp(1j * omega * u * rot - beta * u**alpha * np.exp(1j * alpha * theta)))
    # divided by scale^d so the absolute tolerance is relative to the natural size
    return z.real * scale ** (1 - d)


def _far_series(omega, beta, d, alpha):
    """Large-frequency expansion of the radial integral.

    Returns value, error (smallest retained term) and a mask where the
    expansion reaches :data:`SERIES_RTOL`.
    """
    n = np.arange(SERIES_TERMS)[:, None]
    p = d + n * alpha
    logw = np.log(omega)[None, :]
    logb = np.log(beta)[None, :]
    logmag = gammaln(p) - gammaln(n + 1.0) + n * logb - p * logw
    phase = np.cos(0.5 * np.pi * p)
    odd = np.isclose(p, np.round(p), rtol=0.0, atol=1e-12) & (np.round(p) % 2 == 1)
    phase = np.where(odd, 0.0, phase)
    terms = (-1.0) ** n * phase * np.exp(logmag)
    mag = np.exp(logmag)
    # stop before the terms start growing (asymptotic regime for alpha > 1)
    growing = np.cumsum(np.diff(mag, axis=0, prepend=0.0) > 0, axis=0) > 1
    keep = ~growing
    value = np.sum(np.where(keep, terms, 0.0), axis=0)
    last = np.max(np.where(keep, np.arange(SERIES_TERMS)[:, None], 0), axis=0)
    # first omitted term, or the last kept one when the whole table is used
    err = mag[np.minimum(last + 1, SERIES_TERMS - 1), np.arange(omega.size)]
    ok = err <= SERIES_RTOL * np.abs(value)
    return value, err, ok


def radial_integral(omega, beta, d, alpha, rtol=RADIAL_RTOL, atol=RADIAL_ATOL):
    """``int_0^inf r^(d-1) cos(omega r) exp(-beta r^alpha) dr``, vectorized.

    Parameters
    ----------
    omega : array_like
        Frequencies (the sign is irrelevant).
    beta : array_like
        Positive damping coefficients, broadcast against ``omega``.
    d : int
    alpha : float
    rtol : float
    atol : float
        Absolute tolerance in units of ``scale^d``, where ``scale`` is the
        decay length along the integration ray.

    Returns
    -------
    value, error : ndarray

    Raises
    ------
    QuadratureError
        If any element fails to converge.
    """
    omega = np.abs(np.asarray(omega, dtype=float))
    beta = np.asarray(beta, dtype=float)
    omega, beta = np.broadcast_arrays(omega, beta)
    if omega.size == 0:
        return np.zeros(omega.shape), np.zeros(omega.shape)
    shape = omega.shape
    omega, beta = omega.ravel(), beta.ravel()
    value = np.zeros(omega.size)
    error = np.zeros(omega.size)
    w = omega * beta ** (-1.0 / alpha)
    far = w > 8.0
    # the integral vanishes in the infinite-frequency limit
    far &= np.isfinite(omega)
    done = ~np.isfinite(omega)
    if far.any():
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            v, e, ok = _far_series(omega[far], beta[far], d, alpha)
        idx = np.flatnonzero(far)
        value[idx[ok]], error[idx[ok]] = v[ok], e[ok]
        far[idx[~ok]] = False
    near = ~far & ~done
    if near.any():
        value[near], error[near] = _ray_quadrature(omega[near], beta[near], w[near], d, alpha,
                                                   rtol, atol)
    return value.reshape(shape), error.reshape(shape)


def _ray_quadrature(omega, beta, w, d, alpha, rtol, atol):
    theta = _tilt(alpha) * w / (1.0 + w)
    scale = 1.0 / (omega * np.sin(theta) + (beta * np.cos(alpha * theta)) ** (1.0 / alpha))
    res = tanhsinh(_ray_integrand, 0.0, np.inf,
                   args=(omega, beta, theta, scale, d, alpha), rtol=rtol, atol=atol)
    unit = scale**d
    if not np.all(res.success):
        bad = ~np.asarray(res.success)
        raise QuadratureError(
            f"radial quadrature failed at {int(bad.sum())} of {bad.size} points "
            f"(first omega={omega[bad].ravel()[0]:.4g})",
            estimate=res.integral * unit, achieved=float(np.max((np.abs(res.error) * unit)[bad])))
    return res.integral * unit, res.error * unit


class StableDensity:
    """Evaluator of the stable density for a symbol ``b0(khat)|k|^alpha``.

    Parameters
    ----------
    symbol : StableSymbol
    angular : AngularDensity, optional
        The (normalized) Levy tail density behind ``symbol``; needed only for
        :meth:`tail`.
    rtol : float
        Relative tolerance of the direction integral (the radial one runs at
        :data:`RADIAL_RTOL`).
    azimuth_nodes : int
        Trapezoid nodes for the azimuth around ``y`` in d = 3.
    """

    def __init__(self, symbol, angular=None, rtol=ANGULAR_RTOL, azimuth_nodes=AZIMUTH_NODES):
        if symbol.d > sphere.MAX_DIM:
            raise ParameterError(f"stable densities are implemented for d <= {sphere.MAX_DIM}")
        self.symbol = symbol
        self.angular = angular
        self.d = symbol.d
        self.alpha = symbol.alpha
        self.rtol = float(rtol)
        self.azimuth_nodes = int(azimuth_nodes)

    @classmethod
    def from_kernel(cls, kernel, **kw):
        return cls(StableSymbol.from_kernel(kernel), kernel.tail_angular, **kw)

    @classmethod
    def isotropic(cls, d, alpha, b0=1.0, **kw):
        return cls(StableSymbol.constant(d, alpha, b0), **kw)

    def __call__(self, y):
        """Density at points ``y`` of shape (..., d) (or scalars when d = 1)."""
        return self.evaluate(y)[0]

    def evaluate(self, y):
        """Density and a quadrature error estimate at points ``y``."""
        y = np.asarray(y, dtype=float)
        if self.d == 1 and (y.ndim == 0 or y.shape[-1] != 1):
            y = y[..., None]
        if y.shape[-1] != self.d:
            raise ParameterError(f"points must have {self.d} components")
        flat = y.reshape(-1, self.d)
        val, err = self._eval(flat)
        return val.reshape(y.shape[:-1]), err.reshape(y.shape[:-1])

    def _eval(self, y):
        d, alpha = self.d, self.alpha
        r = np.linalg.norm(y, axis=-1)
        if d == 1:
            b = self.symbol.b0(np.array([[1.0]]))[0]
            val, err = radial_integral(r, b, 1, alpha)
            return val / math.pi, err / math.pi
        out = np.empty(len(y))
        err = np.zeros(len(y))
        origin = r == 0
        if origin.any():
            out[origin] = self._at_origin()
        for i in np.flatnonzero(~origin):
            out[i], err[i] = self._direction_integral(y[i], r[i])
        return out, err

    def _b0_range(self):
        if not hasattr(self, "_brange"):
            nodes, _ = sphere.uniform_rule(self.d, 1024 if self.d == 2 else 48)
            b = self.symbol.b0(nodes)
            self._brange = (float(b.min()), float(b.max()))
        return self._brange

    def _at_origin(self):
        # int_0^inf r^(d-1) exp(-b r^alpha) dr = Gamma(d/alpha) / (alpha b^(d/alpha))
        d, alpha = self.d, self.alpha
        nodes, weights = sphere.uniform_rule(d, 1024 if d == 2 else 48)
        b = self.symbol.b0(nodes)
        radial = math.gamma(d / alpha) / alpha * b ** (-d / alpha)
        return float(np.sum(weights * radial)) / (2 * math.pi) ** d

    def _direction_integral(self, y, r):
        d, alpha = self.d, self.alpha
        yhat = y / r
        # The per-direction pieces are O(1/r) near the peak while S(y) is
        # O(r^(-d-alpha)); the absolute floor is set relative to the pieces.
        peak = math.gamma(d / alpha) / alpha * self._b0_range()[0] ** (-d / alpha)
        atol = ANGULAR_ATOL * peak * min(1.0, 1.0 / r)
        if d == 2:
            # phi measured from yhat; integrand even under khat -> -khat, so [0, pi] twice.
            # Peak at phi = pi/2 is an endpoint of both halves.
            phi_y = math.atan2(yhat[1], yhat[0])

            def f(phi):
                shape = phi.shape
                phi = phi.ravel()
                khat = np.stack([np.cos(phi + phi_y), np.sin(phi + phi_y)], axis=-1)
                val, _ = radial_integral(r * np.cos(phi), self.symbol.b0(khat), 2, alpha)
                return val.reshape(shape)

            total, error = 0.0, 0.0
            for a, b in [(0.0, 0.5 * math.pi), (0.5 * math.pi, math.pi)]:
                res = tanhsinh(f, a, b, rtol=self.rtol, atol=atol)
                self._check(res, y)
                total += float(res.integral)
                error += float(res.error)
            norm = 2.0 / (2 * math.pi) ** 2
            return norm * total, norm * error
        # d == 3: mu = (khat, yhat) in [0, 1], doubled; azimuth by trapezoid
        u, v = sphere.orthonormal_frame(yhat)
        n = self.azimuth_nodes
        psi = 2.0 * math.pi * np.arange(n) / n
        ring = np.cos(psi)[:, None] * u + np.sin(psi)[:, None] * v

        def g(mu):
            shape = mu.shape
            mu = mu.ravel()
            s = np.sqrt(np.clip(1.0 - mu**2, 0.0, None))
            khat = s[:, None, None] * ring[None] + mu[:, None, None] * yhat
            b = self.symbol.b0(khat.reshape(-1, 3)).reshape(len(mu), n)
            val, _ = radial_integral(np.broadcast_to(r * mu[:, None], b.shape), b, 3, alpha)
            return (val.sum(axis=1) * (2.0 * math.pi / n)).reshape(shape)

        res = tanhsinh(g, 0.0, 1.0, rtol=self.rtol, atol=2.0 * math.pi * atol)
        self._check(res, y)
        norm = 2.0 / (2 * math.pi) ** 3
        return norm * float(res.integral), norm * float(res.error)

    def _check(self, res, y):
        if not np.all(res.success):
            raise QuadratureError(f"direction quadrature did not converge at y={y.tolist()}",
                                  estimate=float(res.integral), achieved=float(res.error))

    def tail(self, y):
        """Tail asymptote ``a0(yhat)|y|^(-d-alpha)`` (``a0`` includes ``c_norm``)."""
        if self.angular is None:
            raise ParameterError("tail asymptote needs the angular density of the symbol")
        return stable_tail(self.angular, self.alpha, y)

    def __repr__(self):
        return f"StableDensity(d={self.d}, alpha={self.alpha}, symbol={self.symbol.description})"


def stable_density(sd, y):
    """Evaluate ``sd`` at ``y``; see :class:`StableDensity`."""
    return sd(y)


def stable_tail(angular, alpha, y):
    """``a0(yhat) |y|^(-d-alpha)`` for the normalized tail density ``angular``.

    Raises
    ------
    ParameterError
        If any ``y`` is zero.
    """
    alpha = _check_alpha(alpha)
    d = angular.d
    y = np.asarray(y, dtype=float)
    if d == 1 and (y.ndim == 0 or y.shape[-1] != 1):
        y = y[..., None]
    r = np.linalg.norm(y, axis=-1)
    if np.any(r == 0):
        raise ParameterError("the tail asymptote is undefined at y = 0")
    return angular(y / r[..., None]) * r ** (-d - alpha)


def self_similarity_check(sd, y, rtol=1e-10, min_mass=0.99):
    """Both sides of ``(S * S)(y) = 2^(-d/alpha) S(2^(-1/alpha) y)`` in d = 1.

    ``S * S`` has symbol ``exp(-2 b0 |k|^alpha)``, the law of
    ``2^(1/alpha) X``; substituting ``k -> 2^(-1/alpha) k`` in the Fourier
    integral gives the right-hand side.

    The convolution is integrated over the whole line, split at the two
    peaks ``0`` and ``y``.

    Returns
    -------
    (conv, scaled) : tuple of float

    Raises
    ------
    QuadratureError
        If the same quadrature does not recover at least ``min_mass`` of
        the total mass of ``S``.
    """
    if sd.d != 1:
        raise ParameterError("self_similarity_check is implemented for d = 1")
    y = float(np.asarray(y).ravel()[0])
    alpha = sd.alpha

    def f(u):
        return sd(u) * sd(y - u)

    lo, hi = min(0.0, y), max(0.0, y)
    if hi - lo < 1e-6:
        # peaks (nearly) coincide; the smooth integrand needs only one split
        hi = lo
    pieces = [(-np.inf, lo), (hi, np.inf)] + ([(lo, hi)] if hi > lo else [])
    conv = 0.0
    for a, b in pieces:
        res = tanhsinh(f, a, b, rtol=rtol, atol=0.0)
        if not res.success:
            raise QuadratureError(f"convolution quadrature failed at y={y}",
                                  estimate=float(res.integral), achieved=float(res.error))
        conv += float(res.integral)
    mass = sum(float(tanhsinh(sd, a, b, rtol=rtol).integral) for a, b in [(-np.inf, 0.0), (0.0, np.inf)])
    if abs(mass - 1.0) > 1.0 - min_mass:
        raise QuadratureError(f"quadrature recovers only {mass:.4f} of the density mass", achieved=mass)
    scaled = 2.0 ** (-1.0 / alpha) * float(sd(2.0 ** (-1.0 / alpha) * y))
    return conv, scaled


def example3_density(alpha, y):
    """Product of one-dimensional standard stable densities (symbol ``exp(-|k_j|^alpha)``).

    ``y`` has shape (..., d); the product law has symbol ``sum_j |k_j|^alpha``,
    whose Levy measure lives on the coordinate axes.
    """
    alpha = _check_alpha(alpha)
    y = np.asarray(y, dtype=float)
    one = StableDensity.isotropic(1, alpha, 1.0)
    return np.prod(one(y[..., None]), axis=-1)
