"""Smooth-cutoff evaluation of ``1 - ahat(k)`` near ``k = 0`` in d = 2, 3.

A sharp cutoff at radius ``R`` leaves a far sum that is only known to lie in
``[0, 2 T(R)]``, a floor of about 5e-5 at feasible radii.  Splitting the
kernel with a smooth radial cutoff ``chi(|z| / R)`` instead (1 on [0, 1/2],
a C^4 smoothstep to 0 on [1/2, 1]) gives

    1 - ahat(k) = sum_z a(z) chi(|z|/R) (1 - cos k.z)        near sum
                + b0(khat) |k|^alpha                         stable symbol
                + c int_S a0(u) Q(k.u) du                    correction
                + E,

    Q(lam) = -int_0^R r^(-1-alpha) chi(r/R) (1 - cos lam r) dr,

because ``g = a (1 - chi)`` is a smooth function on R^d and its lattice sum
differs from its integral only by the Poisson images
``E = sum_{n != 0} ghat(2 pi n) - ghat(k + 2 pi n)``.  With
``|ghat(xi)| <= ||Delta^2 g||_1 |xi|^-4`` and explicit bounds on the
derivatives of ``chi`` and of ``a0``, ``|E|`` is bounded by a constant times
``R^(-alpha-4)``.  The angular derivatives are available in closed form when
``a0`` is constant or a polynomial in ``(x . axis)^2``; other densities are
not supported here.

The correction integral is computed by composite Gauss-Legendre in ``r``
and a trapezoid (d = 2) or Gauss-Legendre x trapezoid (d = 3) rule on the
sphere; their errors are estimated by comparison with half-resolution rules.
"""
import math
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial
from scipy.special import comb, roots_legendre

from . import sphere
from .kernel import lattice_box

EPS = np.finfo(float).eps

# C^4 smoothstep on [0, 1]: 0 -> 1 with four vanishing derivatives at both ends
SMOOTHSTEP = Polynomial([0, 0, 0, 0, 0, 126, -420, 540, -315, 70])

# largest |k| R handled (cost grows like (|k| R)^(d-1))
KR_MAX = {2: 512.0, 3: 96.0}
POINT_BUDGET = {2: 4_000_000, 3: 2_000_000}
R_MIN = 16.0
RADIAL_NODES = 20
SERIES_TERMS = 16


def _poly_sup(p, lo, hi):
    """Maximum of ``|p|`` on ``[lo, hi]`` (critical points and end points)."""
    pts = [lo, hi]
    if p.degree() > 1:
        pts += [r.real for r in p.deriv().roots() if abs(r.imag) < 1e-9 and lo <= r.real <= hi]
    return float(np.max(np.abs(p(np.array(pts))))) * (1.0 + 1e-12)


@lru_cache(maxsize=None)
def _smoothstep_sups():
    """``sup |S^(j)|`` on [0, 1] for j = 0..4."""
    return tuple(_poly_sup(SMOOTHSTEP.deriv(j) if j else SMOOTHSTEP, 0.0, 1.0) for j in range(5))


@lru_cache(maxsize=None)
def _lattice_zeta4(d):
    """Upper bound for ``sum_{n in Z^d, n != 0} |n|^-4`` (d = 2, 3)."""
    M = 24
    n = lattice_box(M, d).astype(float)
    r2 = np.sum(n * n, axis=-1)
    inner = r2[(r2 > 0) & (r2 <= M * M)]
    # points beyond M sit in unit cells inside |x| > M - sqrt(d)/2
    rho = M - 0.5 * math.sqrt(d)
    tail = sphere.surface_area(d) * rho ** (d - 4) / (4 - d)
    return float(np.sum(inner ** -2.0)) + tail


def supports(kernel):
    """True if the aliasing bound is available for this kernel."""
    return kernel.d in (2, 3) and kernel.angular.kind in ("constant", "cosine-poly")


def _angular_bounds(angular, d):
    """``(sup a0, sup |Lap_S a0|, sup |Lap_S^2 a0|)`` on the sphere."""
    if angular.kind == "constant":
        return angular.sup_bound, 0.0, 0.0
    coeffs = np.asarray(angular.params["coeffs"], dtype=float) * angular.params.get("scale", 1.0)
    # a0 = p(t) with t = x . axis; p(t) = P(t^2)
    pc = np.zeros(2 * coeffs.size - 1)
    pc[::2] = coeffs
    p = Polynomial(pc)
    t = Polynomial([0.0, 1.0])

    def lap(q):
        # Laplace-Beltrami of a zonal function on S^(d-1)
        return (1 - t * t) * q.deriv(2) - (d - 1) * t * q.deriv(1)

    l1 = lap(p)
    l2 = lap(l1)
    return angular.sup_bound, _poly_sup(l1, -1.0, 1.0), _poly_sup(l2, -1.0, 1.0)


def _falling(gamma, m):
    """``|(-gamma)(-gamma-1)...(-gamma-m+1)|``: size of the m-th derivative of ``r^-gamma``."""
    out = 1.0
    for i in range(m):
        out *= gamma + i
    return abs(out)


def _shell_derivs(gamma):
    """Dimensionless bounds ``d_n`` with ``|(r^-gamma psi)^(n)| <= d_n h^(-gamma-n)`` on ``[h, 2h]``.

    ``psi(r) = S(r/h - 1)`` is the rising smoothstep, so ``psi^(j) <= M_j h^-j``.
    """
    M = _smoothstep_sups()
    return [sum(comb(n, j) * _falling(gamma, n - j) * M[j] for j in range(n + 1)) for n in range(5)]


@lru_cache(maxsize=64)
def _laplacian_sq_norm_unit(d, alpha, sups):
    """``||Delta^2 g||_1`` for ``R = 1`` and ``c = 1``; scales like ``R^(-alpha-4)``."""
    s0, s2, s4 = sups
    area = sphere.surface_area(d)
    beta = d + alpha
    a = d - 1
    h = 0.5
    vol = (1.0 - h**d) / d
    dp = _shell_derivs(beta)
    dq = _shell_derivs(beta + 2)
    scale = h ** (-beta - 4)
    # cutoff shell [R/2, R], all 1/r factors bounded by 1/h
    lap2 = scale * (dp[4] + 2 * a * dp[3] + abs(a * (a - 2)) * (dp[2] + dp[1]))
    mixed = scale * (dp[2] + a * dp[1] + dq[2] + a * dq[1])
    zero = scale
    # pure power beyond R
    ta = 1.0 / (alpha + 4)
    lap2_t = abs(beta * (beta + 2 - d) * (beta + 2) * (beta + 4 - d)) * ta
    mixed_t = (abs(beta * (beta + 2 - d)) + abs((beta + 2) * (beta + 4 - d))) * ta
    zero_t = ta
    return area * (s0 * (lap2 * vol + lap2_t) + s2 * (mixed * vol + mixed_t) + s4 * (zero * vol + zero_t))


def alias_bound(kernel, R, kmax):
    """Certified bound on the Poisson-image error ``|E|`` for ``|k| <= kmax``."""
    if not kmax < 2 * math.pi:
        return math.inf
    sups = _angular_bounds(kernel.angular, kernel.d)
    norm = kernel.c_norm * _laplacian_sq_norm_unit(kernel.d, kernel.alpha, sups) * R ** (-kernel.alpha - 4)
    images = (2 * math.pi) ** -4 + (2 * math.pi - kmax) ** -4
    return norm * images * _lattice_zeta4(kernel.d)


def choose_radius(kernel, tol, kmax):
    """Smallest radius with alias bound ``<= tol / 4``, clipped to ``[R_MIN, budget]``."""
    d, alpha = kernel.d, kernel.alpha
    cap = 0.5 * POINT_BUDGET[d] ** (1.0 / d)
    unit = alias_bound(kernel, 1.0, kmax)
    if not math.isfinite(unit):
        return cap
    R = (4.0 * unit / tol) ** (1.0 / (alpha + 4))
    return float(min(cap, max(R_MIN, math.ceil(R))))


def cutoff(s):
    """``chi(s)``: 1 on [0, 1/2], smoothstep down to 0 on [1/2, 1], 0 beyond."""
    s = np.asarray(s, dtype=float)
    x = np.clip(2.0 * s - 1.0, 0.0, 1.0)
    return 1.0 - SMOOTHSTEP(x)


def _radial_rule(R, lam_max, n):
    """Composite Gauss-Legendre on ``[r0, R]`` with ``r0 = min(R/2, 1/lam_max)``."""
    r0 = R / 2 if lam_max * R <= 2 else 1.0 / lam_max
    edges = [r0]
    step_cap = math.pi / lam_max if lam_max > 0 else R
    while edges[-1] < R:
        r = edges[-1]
        nxt = min(2 * r, r + step_cap, R)
        if r < R / 2 < nxt:
            nxt = R / 2
        edges.append(nxt)
    edges = np.array(edges)
    x, w = roots_legendre(n)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w).ravel()
    return r0, nodes, weights


def correction_q(lam, R, alpha, n=RADIAL_NODES):
    """``Q(lam) = -int_0^R r^(-1-alpha) chi(r/R) (1 - cos lam r) dr``, vectorised.

    Returns
    -------
    q, err : ndarray, float
        Values and an estimate of the radial quadrature error.
    """
    lam = np.abs(np.asarray(lam, dtype=float))
    lam_max = float(lam.max(initial=0.0))
    if lam_max == 0:
        return np.zeros_like(lam), 0.0
    out = []
    for m in (n, n // 2):
        r0, r, w = _radial_rule(R, lam_max, m)
        # series on [0, r0], where chi = 1 and lam r0 <= 1
        series = np.zeros_like(lam)
        x2 = (lam * r0) ** 2
        term = np.ones_like(lam)
        for j in range(1, SERIES_TERMS + 1):
            term = term * x2 / ((2 * j - 1) * (2 * j))
            series += (-1) ** (j + 1) * term / (2 * j - alpha)
        series *= r0 ** (-alpha)
        wr = w * r ** (-1.0 - alpha) * cutoff(r / R)
        q = np.empty_like(lam)
        flat, qf = lam.ravel(), q.reshape(-1)
        step = max(1, 2_000_000 // r.size)
        for i in range(0, flat.size, step):
            s = np.sin(0.5 * np.outer(flat[i:i + step], r))
            qf[i:i + step] = 2.0 * (s * s) @ wr
        out.append(-(series + q))
    return out[0], float(np.max(np.abs(out[0] - out[1])))


def _angular_nodes(d, khat, kR, n_phi):
    """Sphere rule adapted to ``t = u . khat``; returns nodes, weights, t, and a half rule mask."""
    if d == 2:
        n = 2 * int(math.ceil((2 * kR + 64) / 2))
        theta = 2 * math.pi * np.arange(n) / n + math.atan2(khat[1], khat[0])
        nodes = np.stack([np.cos(theta), np.sin(theta)], axis=-1)
        w = np.full(n, 2 * math.pi / n)
        half_w = np.where(np.arange(n) % 2 == 0, 2 * w, 0.0)
        return nodes, w, nodes @ khat, half_w
    full = []
    for nt in (int(kR) + 48, (int(kR) + 48) // 2):
        t, wt = roots_legendre(nt)
        phi = 2 * math.pi * np.arange(n_phi) / n_phi
        e1, e2 = sphere.orthonormal_frame(khat)
        s = np.sqrt(1 - t * t)
        nodes = (t[:, None, None] * khat + s[:, None, None]
                 * (np.cos(phi)[None, :, None] * e1 + np.sin(phi)[None, :, None] * e2)).reshape(-1, 3)
        w = np.outer(wt, np.full(n_phi, 2 * math.pi / n_phi)).ravel()
        full.append((nodes, w))
    (nodes, w), (hn, hw) = full
    # the half rule has different nodes; stack them and weight by masks
    all_nodes = np.concatenate([nodes, hn])
    main = np.concatenate([w, np.zeros(len(hw))])
    half = np.concatenate([np.zeros(len(w)), hw])
    return all_nodes, main, all_nodes @ khat, half


def near_sum(kernel, k, R):
    """``sum_{0 < |z| < R} a(z) chi(|z|/R) (1 - cos k.z)`` for rows of ``k``."""
    d = kernel.d
    pts = lattice_box(int(math.ceil(R)), d)
    n2 = np.sum(pts * pts, axis=-1)
    pts = pts[(n2 > 0) & (n2 < R * R)]
    w = kernel.mass(pts) * cutoff(np.sqrt(n2[(n2 > 0) & (n2 < R * R)]) / R)
    ptsf = pts.T.astype(float)
    out = np.empty(k.shape[0])
    step = max(1, 4_000_000 // max(pts.shape[0], 1))
    for i in range(0, k.shape[0], step):
        s = np.sin(0.5 * (k[i:i + step] @ ptsf))
        out[i:i + step] = 2.0 * (s * s) @ w
    return out


def one_minus_ahat_smooth(kernel, k, tol, stable):
    """``1 - ahat`` at rows of ``k`` by the smooth split.

    Parameters
    ----------
    kernel : JumpKernel
        d = 2 or 3 with a constant or cosine-poly angular density.
    k : (m, d) ndarray
        Points with ``|k| < 2 pi``.
    tol : float
        Target for the aliasing bound (the radius is chosen from it).
    stable : (m,) ndarray
        ``b0(khat) |k|^alpha`` at the same points.

    Returns
    -------
    value, err : ndarray
        ``err`` is ``inf`` where ``|k| R`` exceeds :data:`KR_MAX`.
    """
    d, alpha = kernel.d, kernel.alpha
    kn = np.linalg.norm(k, axis=-1)
    kmax = float(kn.max(initial=0.0))
    R = choose_radius(kernel, tol, kmax)
    alias = alias_bound(kernel, R, kmax)
    value = np.full(kn.shape, np.nan)
    err = np.full(kn.shape, np.inf)
    ok = kn * R <= KR_MAX[d]
    if not ok.any():
        return value, err
    near = near_sum(kernel, k[ok], R)
    sup0 = kernel.angular.sup_bound
    n_phi = 8
    if kernel.angular.kind == "cosine-poly":
        n_phi = 4 * len(kernel.angular.params["coeffs"]) + 8
    corr = np.zeros(near.shape)
    corr_err = np.zeros(near.shape)
    for i, (kv, kk) in enumerate(zip(k[ok], kn[ok])):
        if kk == 0:
            continue
        khat = kv / kk
        nodes, w, t, half = _angular_nodes(d, khat, kk * R, n_phi)
        q, q_err = correction_q(kk * t, R, alpha)
        f = kernel.angular(nodes) * q
        corr[i] = kernel.c_norm * np.dot(f, w)
        ang_err = kernel.c_norm * abs(np.dot(f, w) - np.dot(f, half))
        corr_err[i] = ang_err + kernel.c_norm * sup0 * sphere.surface_area(d) * q_err
    value[ok] = near + stable[ok] + corr
    rounding = 64 * EPS * (near + np.abs(stable[ok]) + np.abs(corr))
    err[ok] = alias + corr_err + rounding + 64 * EPS
    return value, err
