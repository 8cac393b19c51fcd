"""Characteristic function of the jump law and its stable small-k symbol.

For a kernel ``a`` the characteristic function is the cosine series

    ahat(k) = sum_z cos((k, z)) a(z),   k in T^d = [-pi, pi]^d,

and ``1 - ahat(k) = b0(k/|k|) |k|**alpha + residual``.  The coefficient

    b0(e) = C(alpha) * int_{S^(d-1)} a0(x) |(x, e)|**alpha dS(x),
    C(alpha) = -Gamma(-alpha) cos(alpha pi / 2) = pi / (2 Gamma(1 + alpha) sin(alpha pi / 2)),

is evaluated with ``a0`` the *normalised* tail density ``c_norm * angular``.

In d = 1 the cosine series has a closed form: with ``s = 1 + alpha``,

    sum_{z >= 1} cos(k z) z**(-s)
        = Gamma(1 - s) cos((s - 1) pi / 2) |k|**(s - 1)
          + sum_{m >= 0} zeta(s - 2m) (-1)**m k**(2m) / (2m)!,   |k| < 2 pi,

which gives ``1 - ahat`` and the residual without cancellation.  In
d >= 2 the series is summed directly inside a radius chosen from
:func:`~stablewalk.kernel.tail_mass`, and the truncation is reported.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import factorial, zeta

from . import smoothcut, sphere
from .errors import IntegrityError, ParameterError
from .kernel import lattice_box, tail_mass

LOGGER = logging.getLogger(__name__)

EPS = np.finfo(float).eps
SERIES_TERMS = 40
# cap on lattice points summed per evaluation in d >= 2
DIRECT_POINT_BUDGET = 4_000_000


def _check_alpha(alpha):
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in the open interval (0, 2), got {alpha}")
    return alpha


def stable_prefactor(alpha):
    """``-Gamma(-alpha) cos(alpha pi / 2)``, continuous through alpha = 1.

    The reflection formula turns the product into
    ``pi / (2 Gamma(1 + alpha) sin(alpha pi / 2))``, which has no removable
    singularity, so no special branch near alpha = 1 is needed.
    """
    alpha = _check_alpha(alpha)
    return math.pi / (2.0 * math.gamma(1.0 + alpha) * math.sin(0.5 * math.pi * alpha))


def stable_coeff(angular, alpha, khat, n=64):
    """Stable coefficient ``b0(khat)`` for the tail density ``angular``.

    Parameters
    ----------
    angular : AngularDensity
        Tail density; pass ``kernel.tail_angular`` to include ``c_norm``.
    alpha : float
    khat : array_like, shape (d,) or (m, d)
        Unit direction(s).
    n : int
        Gauss-Jacobi nodes per hemisphere (d = 2) or per polar axis (d = 3).

    Returns
    -------
    float or ndarray
    """
    pref = stable_prefactor(alpha)
    khat = np.asarray(khat, dtype=float)
    single = khat.ndim == 1
    khat = sphere.normalize(np.atleast_2d(khat))
    nodes, weights = sphere.zonal_rule(angular.d, alpha, khat, n)
    val = pref * np.sum(angular(nodes) * weights, axis=-1)
    return float(val[0]) if single else val


class StableSymbol:
    """The homogeneous symbol ``b0(khat) |k|**alpha`` of a symmetric stable law.

    Parameters
    ----------
    d : int
    alpha : float
    b0 : callable
        Maps unit vectors (m, d) to positive values (m,).
    description : dict
        JSON-friendly description of the angular law (kind and parameters).
    """

    def __init__(self, d, alpha, b0, description=None):
        self.d = int(d)
        self.alpha = _check_alpha(alpha)
        self._b0 = b0
        self.description = dict(description or {})

    @classmethod
    def from_angular(cls, angular, alpha, n=64):
        """Symbol of the stable law whose Levy density is ``angular(x)|x|^(-d-alpha)``."""
        def b0(khat):
            return stable_coeff(angular, alpha, khat, n)

        desc = {"kind": "angular", "angular": angular.params, "nodes_per_axis": n,
                "rule": {1: "two-point", 2: "Gauss-Jacobi half circles",
                         3: "Gauss-Jacobi x trapezoid"}[angular.d]}
        return cls(angular.d, alpha, b0, desc)

    @classmethod
    def from_kernel(cls, kernel, n=64):
        return cls.from_angular(kernel.tail_angular, kernel.alpha, n)

    @classmethod
    def constant(cls, d, alpha, value):
        value = float(value)
        if not value > 0:
            raise ParameterError("b0 must be positive")
        return cls(d, alpha, lambda khat: np.full(np.shape(khat)[:-1], value),
                   {"kind": "constant", "value": value})

    @classmethod
    def from_function(cls, d, alpha, func, name="custom"):
        return cls(d, alpha, func, {"kind": name})

    @property
    def is_constant(self):
        return self.description.get("kind") == "constant"

    def b0(self, khat):
        khat = sphere.normalize(np.atleast_2d(np.asarray(khat, dtype=float)))
        return np.asarray(self._b0(khat), dtype=float)

    def __call__(self, k):
        """``b0(k/|k|) |k|**alpha`` for k of shape (..., d); zero at k = 0."""
        k = np.asarray(k, dtype=float)
        flat = k.reshape(-1, self.d)
        r = np.linalg.norm(flat, axis=-1)
        out = np.zeros(r.shape)
        nz = r > 0
        if nz.any():
            out[nz] = self.b0(flat[nz]) * r[nz] ** self.alpha
        return out.reshape(k.shape[:-1])


@dataclass
class SymbolEval:
    """Characteristic function values at torus points ``k``.

    ``residual = (ahat - 1) - stable_approx`` with
    ``stable_approx = -b0(khat) |k|**alpha``; ``trunc_error`` bounds the error
    in ``ahat`` (and in ``1 - ahat``).
    """

    k: np.ndarray
    ahat: np.ndarray
    stable_approx: np.ndarray
    residual: np.ndarray
    trunc_error: np.ndarray

    @property
    def one_minus_ahat(self):
        return self.stable_approx * -1.0 - self.residual


# ----------------------------------------------------------------------------
# d = 1 closed form
# ----------------------------------------------------------------------------

@lru_cache(maxsize=32)
def _series_coeffs(alpha):
    """Taylor coefficients ``zeta(1 + alpha - 2m) (-1)^m / (2m)!`` for m >= 1."""
    m = np.arange(1, SERIES_TERMS + 1)
    c = zeta(1.0 + alpha - 2.0 * m) * (-1.0) ** m / factorial(2 * m)
    c.setflags(write=False)
    return c


def _wrap(k):
    """Reduce to the torus [-pi, pi)."""
    return np.mod(np.asarray(k, dtype=float) + np.pi, 2.0 * np.pi) - np.pi


def _one_dim(kernel, k):
    """Return ``(stable_part, residual, err)`` for d = 1, with ``1-ahat = stable - residual``."""
    alpha = kernel.alpha
    amp = 2.0 * kernel.c_norm * float(kernel.angular(np.array([[1.0]]))[0])
    k = np.abs(_wrap(k))
    k2 = k * k
    coef = _series_coeffs(alpha)
    poly = np.zeros_like(k)
    absum = np.zeros_like(k)
    for c in coef[::-1]:
        poly = poly * k2 + c
        absum = absum * k2 + abs(c)
    resid = amp * poly * k2
    stable = amp * stable_prefactor(alpha) * k ** alpha
    err = 16 * EPS * (stable + amp * absum * k2) + EPS
    return stable, resid, err


# ----------------------------------------------------------------------------
# d >= 2 direct summation
# ----------------------------------------------------------------------------

def _radius_for(kernel, tol, n_eval=1):
    """Smallest radius with ``2 * tail.upper <= tol`` subject to the point budget."""
    d = kernel.d
    budget = DIRECT_POINT_BUDGET / max(n_eval, 1)
    cap = max(kernel.R_near, min(kernel.R_box, int((budget / 2 ** d) ** (1.0 / d))))
    R = kernel.R_near
    while R < cap and 2.0 * tail_mass(kernel, R).upper > tol:
        R = min(cap, 2 * R)
    return R


def _far_estimate(kernel, R, k):
    """Midpoint and half-width for ``sum_{|z|>R} a(z) (1 - cos(k z))`` at each row of ``k``.

    The sum lies in ``[0, U]`` with ``U = min(2 T, B(k))``: ``T`` is the tail
    mass and ``B`` bounds ``1 - cos(k z) <= min(2, |k|^2 |z|^2 / 2)`` by the
    same integral comparison as the tail mass, which makes ``U`` vanish at
    ``k = 0``.
    """
    d, alpha = kernel.d, kernel.alpha
    kk = np.linalg.norm(np.asarray(k, dtype=float).reshape(-1, d), axis=-1)
    upper = np.full(kk.shape, 2.0 * tail_mass(kernel, R).upper)
    h = 0.5 * math.sqrt(d)
    Rp = R - 2.0 * h
    if Rp > 0:
        with np.errstate(divide="ignore"):
            rho = np.where(kk > 0, 2.0 / kk, np.inf)
        beyond = 2.0 * Rp ** -alpha / alpha
        inner = (0.5 * kk**2 * (np.minimum(rho, 1e300) ** (2.0 - alpha) - Rp ** (2.0 - alpha))
                 / (2.0 - alpha) + 2.0 * rho ** -alpha / alpha)
        G = np.where(rho <= Rp, beyond, np.where(kk > 0, inner, 0.0))
        scale = (kernel.c_norm * kernel.angular.sup_bound * sphere.surface_area(d)
                 * ((R - h) / Rp) ** (d - 1))
        upper = np.minimum(upper, scale * G)
    return 0.5 * upper, 0.5 * upper


def _direct(kernel, k, tol):
    k = np.asarray(k, dtype=float).reshape(-1, kernel.d)
    R = _radius_for(kernel, tol, max(1, k.shape[0] // 64))
    pts = lattice_box(R, kernel.d)
    n2 = np.sum(pts * pts, axis=-1)
    pts = pts[(n2 > 0) & (n2 <= R * R)]
    w = kernel.mass(pts)
    out = np.empty(k.shape[0])
    step = max(1, DIRECT_POINT_BUDGET // max(pts.shape[0], 1))
    for i in range(0, k.shape[0], step):
        phase = k[i:i + step] @ pts.T.astype(float)
        out[i:i + step] = (1.0 - np.cos(phase)) @ w
    far, err = _far_estimate(kernel, R, k)
    return out + far, err + 64 * EPS, R


def one_minus_ahat(kernel, k, tol=1e-10):
    """``1 - ahat(k)`` with an error bound, vectorised over ``k``.

    Parameters
    ----------
    kernel : JumpKernel
    k : array_like
        Shape (..., d); in d = 1 a plain array of wave numbers is accepted.
    tol : float
        Requested truncation error (d >= 2 only; d = 1 is exact to rounding).

    Returns
    -------
    value, err : ndarray
    """
    if not tol > 0:
        raise ParameterError("tol must be positive")
    if kernel.d == 1:
        k = np.asarray(k, dtype=float)
        if k.ndim and k.shape[-1] == 1:
            k = k[..., 0]
        stable, resid, err = _one_dim(kernel, k)
        return stable - resid, err
    k = _wrap(k)
    shape = k.shape[:-1]
    flat = k.reshape(-1, kernel.d)
    R = _radius_for(kernel, tol, max(1, flat.shape[0] // 64))
    _, crude_err = _far_estimate(kernel, R, flat)
    val = np.full(flat.shape[0], np.nan)
    err = np.full(flat.shape[0], np.inf)
    refine = crude_err + 64 * EPS > tol
    if smoothcut.supports(kernel) and refine.any():
        stable = StableSymbol.from_kernel(kernel)(flat[refine])
        v, e = smoothcut.one_minus_ahat_smooth(kernel, flat[refine], tol, stable)
        val[refine], err[refine] = v, e
    todo = ~(err <= tol)
    if todo.any():
        v, e, R = _direct(kernel, flat[todo], tol)
        take = e < err[todo]
        idx = np.flatnonzero(todo)[take]
        val[idx], err[idx] = v[take], e[take]
    if err.max(initial=0.0) > tol:
        LOGGER.info("d=%d symbol error %.3g > tol=%.3g", kernel.d, err.max(), tol)
    return val.reshape(shape), err.reshape(shape)


def char_fn(kernel, k, tol=1e-10):
    """Evaluate ``ahat`` and its stable approximation at torus points.

    In d >= 2, if ``tol`` is below what the summation budget can certify,
    the achievable bound is reported in ``trunc_error`` instead of failing.

    Returns
    -------
    SymbolEval
    """
    k = np.asarray(k, dtype=float)
    if kernel.d == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    kw = _wrap(k)
    if kernel.d == 1:
        stable, resid, err = _one_dim(kernel, kw[..., 0])
        return SymbolEval(k, 1.0 - stable + resid, -stable, resid, err)
    omah, err = one_minus_ahat(kernel, kw, tol)
    stable = StableSymbol.from_kernel(kernel)(kw)
    return SymbolEval(k, 1.0 - omah, -stable, -omah + stable, err)


def torus_grid(N, d):
    """FFT-ordered torus grid ``2 pi fftfreq(N)`` in each axis, shape (N,)*d + (d,)."""
    k1 = 2.0 * np.pi * np.fft.fftfreq(N)
    grids = np.meshgrid(*([k1] * d), indexing="ij")
    return np.stack(grids, axis=-1)


def one_minus_ahat_grid(kernel, N, tol=1e-10):
    """``1 - ahat`` on the FFT-ordered ``N^d`` torus grid with an error bound.

    In d >= 2 the truncated kernel is folded modulo N and transformed with a
    single FFT, which equals the direct sum at the grid points.
    """
    if kernel.d == 1:
        val, err = one_minus_ahat(kernel, 2.0 * np.pi * np.fft.fftfreq(N))
        return val, err
    d = kernel.d
    R = _radius_for(kernel, tol)
    folded = np.zeros((N,) * d)
    inside = 0.0
    for x1 in range(0, R + 1):
        r1 = math.isqrt(R * R - x1 * x1)
        rest = lattice_box(r1, d - 1)
        pts = np.concatenate([np.full((rest.shape[0], 1), x1), rest], axis=1)
        pts = pts[np.any(pts != 0, axis=1)]
        w = kernel.mass(pts)
        inside += w.sum() * (2.0 if x1 > 0 else 1.0)
        np.add.at(folded, tuple(np.mod(pts, N).T), w)
        if x1 > 0:
            np.add.at(folded, tuple(np.mod(-pts, N).T), w)
    ah = np.fft.fftn(folded).real
    far, err = _far_estimate(kernel, R, torus_grid(N, d))
    val = inside - ah + far.reshape(ah.shape)
    return val, err.reshape(ah.shape) + 64 * EPS * N ** (d / 2)


def spectral_gap(kernel, grid_n=64, tol=1e-10):
    """Minimum of ``(1 - ahat(k)) / |k|^alpha`` over the ``grid_n^d`` torus grid.

    The FFT grids are nested, so doubling ``grid_n`` can only lower the value.

    Raises
    ------
    IntegrityError
        If the certified minimum is not positive.
    """
    if grid_n < 8:
        raise ParameterError("grid_n must be >= 8")
    val, err = one_minus_ahat_grid(kernel, grid_n, tol)
    k = torus_grid(grid_n, kernel.d)
    r = np.linalg.norm(k, axis=-1)
    nz = r > 0
    ratio = val[nz] / r[nz] ** kernel.alpha
    lower = (val[nz] - err[nz]) / r[nz] ** kernel.alpha
    if lower.min() <= 0:
        raise IntegrityError(f"1 - ahat is not certified positive on the torus (min {lower.min():.3g})")
    return float(ratio.min())


def residual_slope(kernel, direction=None, scales=None):
    """Log-log slope of ``|residual(k)|`` along a ray of dyadic scales.

    Returns
    -------
    slope : float
    k_abs, residual : ndarray
    """
    d = kernel.d
    direction = sphere.normalize(np.eye(d)[0] if direction is None else direction)
    scales = 2.0 ** -np.arange(3, 8) if scales is None else np.asarray(scales, dtype=float)
    ev = char_fn(kernel, scales[:, None] * direction)
    res = np.abs(ev.residual)
    slope = np.polyfit(np.log(scales), np.log(res), 1)[0]
    return float(slope), scales, res


# ----------------------------------------------------------------------------
# continuum characteristic functions
# ----------------------------------------------------------------------------

def poisson_fold(alpha_hat, support_radius, k):
    """Periodise a compactly supported characteristic function over 2 pi Z^d.

    Parameters
    ----------
    alpha_hat : callable
        Maps points of shape (m, d) to values (m,); assumed zero for
        ``|k| > support_radius``.
    support_radius : float
    k : array_like, shape (..., d)

    Returns
    -------
    ndarray
        ``sum_n alpha_hat(k + 2 pi n)`` over the finitely many shifts with
        ``|k + 2 pi n| <= support_radius``.
    """
    support_radius = float(support_radius)
    if not math.isfinite(support_radius) or support_radius < 0:
        raise ParameterError("support_radius must be finite and non-negative")
    k = np.asarray(k, dtype=float)
    d = k.shape[-1]
    flat = k.reshape(-1, d)
    reach = int(math.ceil((support_radius + np.abs(flat).max(initial=0.0)) / (2 * np.pi)))
    out = np.zeros(flat.shape[0])
    for n in lattice_box(reach, d):
        shifted = flat + 2.0 * np.pi * n
        inside = np.linalg.norm(shifted, axis=-1) <= support_radius
        if inside.any():
            out[inside] += alpha_hat(shifted[inside])
    return out.reshape(k.shape[:-1])


EXAMPLE1_SUPPORT = 4.0


def example1_charfn(k):
    """Characteristic function of the density ``sin(r)^4 / (pi^2 r^4)`` on R^3.

    ``k`` is either an array of 3-vectors (..., 3) or of radii ``|k|``.
    Piecewise: ``1 - 3|k|/8`` on [0, 2], ``2/|k| - 1 + |k|/8`` on [2, 4], 0 beyond.
    """
    k = np.asarray(k, dtype=float)
    r = np.linalg.norm(k, axis=-1) if k.ndim and k.shape[-1] == 3 else np.abs(k)
    with np.errstate(divide="ignore"):
        out = np.where(r <= 2.0, 1.0 - 3.0 * r / 8.0,
                       np.where(r <= 4.0, 2.0 / np.maximum(r, 2.0) - 1.0 + r / 8.0, 0.0))
    return out


def example1_symbol():
    """Stable symbol matching :func:`example1_charfn` near zero (alpha = 1, b0 = 3/8)."""
    return StableSymbol.constant(3, 1.0, 3.0 / 8.0)

