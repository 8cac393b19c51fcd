"""Quadrature rules on the unit sphere S^(d-1) for d = 1, 2, 3.

Two kinds of rule are provided:

* plain rules for smooth integrands (trapezoid on the circle, product
  Gauss-Legendre x trapezoid on S^2),
* "zonal" rules for integrands of the form ``u(x) |(x, e)|**p`` whose only
  roughness is the ``|cos|**p`` factor vanishing on the great circle
  orthogonal to ``e``.  The weight is absorbed into Gauss-Jacobi nodes so the
  rule converges spectrally for smooth ``u``.

For d = 1 the sphere is the two-point set {-1, +1} with counting measure.
"""
from functools import lru_cache

import numpy as np
from scipy.special import gamma, roots_jacobi, roots_legendre

from .errors import ParameterError

MAX_DIM = 3


def surface_area(d):
    """Area of the unit sphere S^(d-1) (2 for d = 1, 2*pi for d = 2, ...)."""
    return 2.0 * np.pi ** (d / 2) / gamma(d / 2)


def _check_dim(d):
    if d < 1 or d > MAX_DIM:
        raise ParameterError(f"spherical rules are implemented for d in 1..{MAX_DIM}, got d={d}")


def normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n == 0):
        raise ParameterError("cannot normalize the zero vector")
    return v / n


def orthonormal_frame(e):
    """Two unit vectors completing ``e`` (shape (..., 3)) to a right-handed frame."""
    e = normalize(e)
    helper = np.where(np.abs(e[..., :1]) < 0.9, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
    u = np.cross(e, helper)
    u /= np.linalg.norm(u, axis=-1, keepdims=True)
    w = np.cross(e, u)
    return u, w


def uniform_rule(d, n=None):
    """Nodes and weights integrating smooth functions over S^(d-1).

    Parameters
    ----------
    d : int
        Ambient dimension.
    n : int, optional
        Resolution: number of circle nodes (d=2) or Legendre nodes in the
        polar cosine (d=3, with ``2n`` azimuthal nodes).

    Returns
    -------
    nodes : (m, d) ndarray
    weights : (m,) ndarray
        Weights sum to :func:`surface_area`.
    """
    _check_dim(d)
    if d == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    if d == 2:
        n = 512 if n is None else int(n)
        phi = 2.0 * np.pi * np.arange(n) / n
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        return nodes, np.full(n, 2.0 * np.pi / n)
    n = 24 if n is None else int(n)
    mu, wmu = roots_legendre(n)
    nphi = 2 * n
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    s = np.sqrt(1.0 - mu**2)
    nodes = np.stack(
        [np.outer(s, np.cos(phi)), np.outer(s, np.sin(phi)), np.outer(mu, np.ones(nphi))], axis=-1
    ).reshape(-1, 3)
    weights = np.outer(wmu, np.full(nphi, 2.0 * np.pi / nphi)).ravel()
    return nodes, weights


@lru_cache(maxsize=64)
def _jacobi(n, a, b):
    x, w = roots_jacobi(n, a, b)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def zonal_rule(d, power, axis, n=64):
    """Rule for integrals ``int u(x) |(x, axis)|**power dS(x)``.

    The returned weights already contain ``|(x, axis)|**power``; callers only
    multiply by ``u(nodes)``.

    Parameters
    ----------
    d : int
    power : float
        Exponent ``p > -1``.
    axis : (d,) array_like or (m, d) array_like
        Unit vector(s).  With several axes the result has a leading axis.
    n : int
        Number of Jacobi nodes per hemisphere (d=2) or in the polar variable
        (d=3; the azimuth then uses ``2n`` trapezoid nodes).

    Returns
    -------
    nodes : (..., m, d) ndarray
    weights : (..., m) ndarray
    """
    _check_dim(d)
    axis = normalize(np.atleast_1d(np.asarray(axis, dtype=float)))
    if axis.shape[-1] != d:
        raise ParameterError(f"axis must have {d} components")
    if d == 1:
        nodes = np.stack([np.ones_like(axis), -np.ones_like(axis)], axis=-2)
        w = np.abs(axis[..., 0]) ** power
        return nodes, np.stack([w, w], axis=-1)
    if d == 2:
        # v = sin(phi - phi_axis); |cos|^p dphi = (1 - v^2)^((p-1)/2) dv on each half circle
        a = 0.5 * (power - 1.0)
        v, w = _jacobi(n, a, a)
        phi0 = np.arctan2(axis[..., 1], axis[..., 0])[..., None]
        phi = np.concatenate([phi0 + np.arcsin(v), phi0 + np.pi - np.arcsin(v)], axis=-1)
        nodes = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
        weights = np.broadcast_to(np.concatenate([w, w]), phi.shape)
        return nodes, np.array(weights)
    # d == 3: polar variable mu = (x, axis) in [0, 1] mapped to s in [-1, 1]; weight mu^p
    s, w = _jacobi(n, 0.0, float(power))
    mu = 0.5 * (1.0 + s)
    wmu = w * 2.0 ** (-power - 1.0)
    nphi = 2 * n
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    u, v = orthonormal_frame(axis)
    sin_t = np.sqrt(1.0 - mu**2)
    # (..., n, nphi, 3)
    radial = (sin_t[:, None, None] * (np.cos(phi)[None, :, None] * u[..., None, None, :]
                                       + np.sin(phi)[None, :, None] * v[..., None, None, :]))
    upper = radial + mu[:, None, None] * axis[..., None, None, :]
    lower = radial - mu[:, None, None] * axis[..., None, None, :]
    shape = upper.shape[:-3] + (-1, 3)
    nodes = np.concatenate([upper.reshape(shape), lower.reshape(shape)], axis=-2)
    wq = np.outer(wmu, np.full(nphi, 2.0 * np.pi / nphi)).ravel()
    weights = np.broadcast_to(np.concatenate([wq, wq]), nodes.shape[:-1])
    return nodes, np.array(weights)
