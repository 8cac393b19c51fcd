"""Exact transition probabilities ``p(t, x)`` on a lattice box.

Two independent routes:

``pmf_fft``
    Fourier coefficients of ``exp(-t (1 - ahat(k)))`` on an ``N^d`` torus
    grid.  The result is the aliased sum ``sum_m p(t, x + N m)``; the alias
    is controlled through the large-deviation tail ``~ a0 t |y|^(-d-alpha)``.

``pmf_series``
    Compound-Poisson expansion ``p = sum_n e^(-t) t^n / n! a^(*n)`` with
    the convolution powers restricted to a cube of half-width ``L``.  Paths
    that leave the cube and come back are bounded using
    ``P(S_m = u) <= m sup_{|z| >= |u|/m} a(z)``.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.stats import poisson

from ..errors import ParameterError, ToleranceError
from ..kernel import lattice_box
from ..spectral import one_minus_ahat_grid

LOGGER = logging.getLogger(__name__)

EPS = np.finfo(float).eps
# multiplies the leading-order large-deviation asymptote in the alias estimate
ALIAS_SAFETY = 2.0
# alias estimate needs the wrapped distance to be deep in the tail regime
ALIAS_MIN_SCALED_DISTANCE = 3.0
MAX_FFT_POINTS = 1 << 23
MAX_SERIES_WINDOW = {1: 1 << 21, 2: 1500, 3: 80}


@dataclass
class PmfTable:
    """``p(t, x)`` for ``x`` in the cube ``[-box_radius, box_radius]^d``.

    ``values`` is indexed by ``x + box_radius``; ``err_bound`` is a certified
    absolute error per entry (for ``mc`` tables a confidence half-width).
    """

    t: float
    box_radius: int
    d: int
    values: np.ndarray
    method: str
    err_bound: float
    meta: dict = field(default_factory=dict)

    def at(self, x):
        """Values at integer points ``x`` (shape (..., d)); zero outside the box."""
        x = np.asarray(x, dtype=np.int64)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        inside = np.all(np.abs(x) <= self.box_radius, axis=-1)
        out = np.zeros(inside.shape)
        idx = tuple(np.moveaxis(x[inside] + self.box_radius, -1, 0))
        out[inside] = self.values[idx]
        return out

    def points(self):
        return lattice_box(self.box_radius, self.d)

    @property
    def total(self):
        return float(self.values.sum())

    @property
    def outside_mass(self):
        """``1 - sum`` over the box, i.e. the mass outside the box (up to errors)."""
        return 1.0 - self.total

    def rows(self):
        pts = self.points()
        return pts, self.values.ravel()

    def to_csv(self, path):
        from ..io import write_csv

        pts, vals = self.rows()
        header = [f"x{i + 1}" for i in range(self.d)] + ["p", "err_bound"]
        rows = [[*map(int, p), repr(float(v)), repr(float(self.err_bound))]
                for p, v in zip(pts, vals)]
        write_csv(path, header, rows)

    def to_dict(self):
        pts, vals = self.rows()
        return {
            "method": self.method, "t": self.t, "d": self.d, "box_radius": self.box_radius,
            "err_bound": self.err_bound, "meta": self.meta,
            "x": pts.tolist(), "p": vals.tolist(),
        }

    def to_json(self, path):
        from ..io import write_json

        write_json(path, self.to_dict())


def _check_t(t):
    t = float(t)
    if not t >= 0 or not math.isfinite(t):
        raise ParameterError(f"time must be finite and >= 0, got {t}")
    return t


def _box_slice(arr, B, d):
    """Entries of an FFT-ordered periodic array at ``x in [-B, B]^d``."""
    idx = np.arange(-B, B + 1) % arr.shape[0]
    return arr[np.ix_(*([idx] * d))]


def alias_bound(kernel, t, N, box_radius):
    """Estimate of ``sum_{m != 0} sup_{|x|_inf <= B} p(t, x + N m)``.

    Uses ``p(t, y) <= ALIAS_SAFETY * c_norm * sup a0 * t * |y|^(-d-alpha)``,
    the leading large-deviation asymptote with a safety factor.  Returns
    ``inf`` when the wrapped distance is not deep enough in the tail for the
    asymptote to apply.
    """
    d, alpha = kernel.d, kernel.alpha
    if t == 0:
        return 0.0
    reach = box_radius * math.sqrt(d)
    dist = N - reach
    if dist <= 0 or dist < ALIAS_MIN_SCALED_DISTANCE * t ** (1.0 / alpha):
        return math.inf
    amp = ALIAS_SAFETY * kernel.c_norm * kernel.angular.sup_bound * t
    J = 20000
    j = np.arange(1, J + 1, dtype=float)
    count = (2 * j + 1) ** d - (2 * j - 1) ** d
    s = np.sum(count * (j * N - reach) ** (-d - alpha))
    # remaining shells: count_j <= 2d (3j)^(d-1), j N - reach >= j N / 2
    s += 2 * d * 3.0 ** (d - 1) * (N / 2.0) ** (-d - alpha) * J ** (-alpha) / alpha
    return float(amp * s)


def pmf_fft(kernel, t, N=None, box_radius=64, tol=1e-8):
    """Transition probabilities by inverse FFT of ``exp(t (ahat - 1))``.

    Parameters
    ----------
    kernel : JumpKernel
    t : float
    N : int, optional
        Grid size per axis (even).  Chosen automatically as the smallest power
        of two meeting ``tol`` when omitted.
    box_radius : int
    tol : float
        Maximum admissible error bound.

    Returns
    -------
    PmfTable

    Raises
    ------
    ToleranceError
        If the alias bound for the given (or largest admissible) ``N``
        exceeds ``tol``.
    """
    t = _check_t(t)
    d, B = kernel.d, int(box_radius)
    if B < 0:
        raise ParameterError("box_radius must be >= 0")
    n_min = 2 * B + 2
    if N is None:
        N = max(64, 1 << (n_min - 1).bit_length())
        while alias_bound(kernel, t, N, B) > 0.5 * tol and 2 * N <= MAX_FFT_POINTS ** (1.0 / d):
            N *= 2
    N = int(N)
    if N % 2 or N < n_min:
        raise ParameterError(f"N must be even and >= 2*box_radius+2 = {n_min}")
    alias = alias_bound(kernel, t, N, B)
    if alias > tol:
        raise ToleranceError(f"alias bound {alias:.3g} exceeds tol={tol:.3g}; increase N (now {N})",
                             achieved=alias)
    omega, omega_err = one_minus_ahat_grid(kernel, N, tol=max(tol / max(t, 1.0), 1e-12))
    g = np.exp(-t * omega)
    p = sfft.ifftn(g).real
    # |exp(-t w) - exp(-t w')| <= t |w - w'| exp(-t min(w, w')), averaged by the inverse FFT
    symbol_err = t * float(np.mean(omega_err * np.exp(-t * np.maximum(omega - omega_err, 0.0))))
    roundoff = 8 * EPS * math.log2(max(N ** d, 2))
    err = alias + symbol_err + roundoff
    if err > tol:
        raise ToleranceError(f"error bound {err:.3g} exceeds tol={tol:.3g} "
                             f"(symbol truncation {symbol_err:.3g})", achieved=err)
    vals = _box_slice(p, B, d)
    meta = {"N": N, "tol": tol, "alias_bound": alias, "symbol_error": symbol_err,
            "aliased_total": float(p.sum())}
    return PmfTable(t, B, d, vals, "fft", err, meta)


def _poisson_cutoff(t, tol):
    if t == 0:
        return 0
    n = poisson.isf(tol / 2.0, t)
    # isf loses resolution for tiny tails; sf itself stays accurate
    n = int(n) if math.isfinite(n) else int(t)
    while poisson.sf(n, t) > tol / 2.0:
        n += 1
    return max(n, 1)


def _reentry_bound(kernel, t, n_max, L, B):
    """Bound on paths leaving the cube ``[-L, L]^d`` and returning to the box."""
    d, alpha = kernel.d, kernel.alpha
    gap = L - B * math.sqrt(d)
    if gap <= 1:
        return math.inf
    n = np.arange(n_max + 1)
    moment = float(np.sum(poisson.pmf(n, t) * n ** (2.0 + d + alpha))) if t > 0 else 0.0
    return kernel.c_norm * kernel.angular.sup_bound * moment * gap ** (-d - alpha)


def pmf_series(kernel, t, box_radius=64, n_max=None, tol=1e-10, window=None):
    """Transition probabilities from the compound-Poisson convolution series.

    Parameters
    ----------
    kernel : JumpKernel
    t : float
    box_radius : int
    n_max : int, optional
        Last jump count kept; default the smallest with Poisson tail <= tol/2.
    tol : float
    window : int, optional
        Half-width ``L`` of the working cube; chosen from ``tol`` if omitted.

    Returns
    -------
    PmfTable
        ``meta['leaked']`` holds the mass that left the working cube.

    Raises
    ------
    ToleranceError
        If the re-entry bound cannot reach ``tol`` within the window budget.
    """
    t = _check_t(t)
    d, B = kernel.d, int(box_radius)
    if n_max is None:
        n_max = _poisson_cutoff(t, tol)
    n_max = int(n_max)
    pois_tail = float(poisson.sf(n_max, t)) if t > 0 else 0.0
    cap = MAX_SERIES_WINDOW.get(d, 40)
    roundoff = 16 * EPS * (n_max + 1)
    if window is None:
        L = max(2 * B + 8, 64)
        budget = 0.99 * (tol - pois_tail - roundoff)
        unit = _reentry_bound(kernel, t, n_max, B * math.sqrt(d) + 2.0, B)
        if budget > 0 and unit > budget:
            # unit is the bound at gap 2; it scales like gap^(-d-alpha)
            gap = 2.0 * (unit / budget) ** (1.0 / (d + kernel.alpha))
            L = max(L, int(math.ceil(gap + B * math.sqrt(d))) + 1)
        L = min(L, cap)
    else:
        L = int(window)
    reentry = _reentry_bound(kernel, t, n_max, L, B) if t > 0 else 0.0
    err = pois_tail + reentry + roundoff
    if err > tol:
        raise ToleranceError(f"series error bound {err:.3g} exceeds tol={tol:.3g} at window {L}; "
                             "increase the padding or lower t", achieved=err)

    size = 2 * L + 1
    w = np.zeros((size,) * d)
    w[(L,) * d] = 1.0
    acc = poisson.pmf(0, t) * w if t > 0 else w.copy()
    leaked = [0.0]
    if n_max > 0 and t > 0:
        jumps = kernel.mass(lattice_box(2 * L, d)).reshape((4 * L + 1,) * d)
        shape = [sfft.next_fast_len(6 * L + 1, real=True)] * d
        jhat = sfft.rfftn(jumps, shape)
        centre = tuple(slice(2 * L, 4 * L + 1) for _ in range(d))
        weights = poisson.pmf(np.arange(n_max + 1), t)
        for n in range(1, n_max + 1):
            full = sfft.irfftn(sfft.rfftn(w, shape) * jhat, shape)
            w = np.maximum(full[centre], 0.0)
            acc += weights[n] * w
            leaked.append(1.0 - float(w.sum()))
    vals = acc[tuple(slice(L - B, L + B + 1) for _ in range(d))]
    meta = {"n_max": n_max, "window": L, "poisson_tail": pois_tail, "reentry_bound": reentry,
            "leaked": leaked[-1], "tol": tol}
    return PmfTable(t, B, d, vals, "series", err, meta)
