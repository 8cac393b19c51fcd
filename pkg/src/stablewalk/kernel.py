"""Symmetric heavy-tailed jump distributions on Z^d.

A kernel has the exact power-law form

    a(z) = c_norm * a0(z/|z|) * |z|**(-d - alpha),   z != 0,   a(0) = 0,

where ``a0`` is an even, strictly positive angular density and ``c_norm``
makes the total mass one.  Inside ``|z| <= R_near`` the masses are also
tabulated (``near_table``); the table uses the same formula, so lookup and
closed form agree at the crossover by construction.
"""
import configparser
import json
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy.special import zeta

from . import sphere
from .errors import ParameterError, ValidationError

LOGGER = logging.getLogger(__name__)

ANGULAR_KINDS = ("constant", "cosine-poly", "table")


# ----------------------------------------------------------------------------
# angular densities
# ----------------------------------------------------------------------------

class AngularDensity:
    """Even positive density on the unit sphere S^(d-1).

    Use the constructors :meth:`constant`, :meth:`cosine_poly`, :meth:`table`
    or :meth:`from_callable` rather than ``__init__``.

    Attributes
    ----------
    d : int
    lower_bound : float
        A value ``delta > 0`` with ``a0 >= delta`` everywhere.
    sup_bound : float
        An upper bound for ``a0``.
    kind : str
    params : dict
        JSON-serialisable description (empty for callables).
    """

    def __init__(self, d, func, lower_bound, sup_bound, kind="callable", params=None):
        self.d = int(d)
        self._func = func
        self.lower_bound = float(lower_bound)
        self.sup_bound = float(sup_bound)
        self.kind = kind
        self.params = dict(params or {})

    def __call__(self, directions):
        """Evaluate at unit vectors ``directions`` of shape (..., d)."""
        directions = np.asarray(directions, dtype=float)
        if directions.shape[-1] != self.d:
            raise ParameterError(f"directions must have last axis {self.d}")
        return np.asarray(self._func(directions), dtype=float)

    def scaled(self, factor):
        """Return ``factor * a0`` as a new density."""
        factor = float(factor)
        params = dict(self.params)
        params["scale"] = params.get("scale", 1.0) * factor
        return AngularDensity(self.d, lambda x: factor * self._func(x),
                              factor * self.lower_bound, factor * self.sup_bound,
                              self.kind, params)

    def sphere_integral(self, n=None):
        """``int_{S^(d-1)} a0 dS`` by a smooth-integrand rule."""
        nodes, weights = sphere.uniform_rule(self.d, n)
        return float(np.sum(self(nodes) * weights))

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, d, value=1.0):
        value = float(value)
        if not value > 0:
            raise ValidationError("constant angular density must be positive")
        return cls(d, lambda x: np.full(x.shape[:-1], value), value, value,
                   "constant", {"value": value})

    @classmethod
    def cosine_poly(cls, d, coeffs, axis=None):
        """``a0(x) = sum_j coeffs[j] * (x . axis)**(2j)``; even by construction.

        Parameters
        ----------
        d : int
        coeffs : sequence of float
            Coefficients of the polynomial in ``s = (x . axis)**2``.
        axis : array_like, optional
            Unit axis, default the first coordinate direction.
        """
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 1 or coeffs.size == 0:
            raise ValidationError("cosine-poly needs a non-empty coefficient list")
        axis = sphere.normalize(np.eye(d)[0] if axis is None else axis)
        poly = np.polynomial.Polynomial(coeffs)
        if d == 1:
            lo = hi = float(poly(1.0))
        else:
            crit = [0.0, 1.0] + [r.real for r in poly.deriv().roots()
                                 if abs(r.imag) < 1e-12 and 0.0 <= r.real <= 1.0]
            vals = poly(np.array(crit))
            lo, hi = float(vals.min()), float(vals.max())
        if not lo > 0:
            raise ValidationError(f"cosine-poly angular density has minimum {lo} <= 0")

        def f(x):
            s = (x @ axis) ** 2
            return poly(s)

        return cls(d, f, lo, hi, "cosine-poly",
                   {"coeffs": coeffs.tolist(), "axis": axis.tolist()})

    @classmethod
    def table(cls, d, values):
        """Tabulated density.

        d = 1: a single value (the two directions must carry equal weight).
        d = 2: values on the angles ``j*pi/n``, j = 0..n-1, interpolated
        linearly with period pi, which makes the density even.
        """
        values = np.asarray(values, dtype=float).ravel()
        if values.size == 0 or np.any(values <= 0):
            raise ValidationError("table angular density needs positive values")
        if d == 1:
            if values.size != 1:
                raise ValidationError("a d=1 table holds exactly one value")
            return cls.constant(1, values[0])._retag("table", {"values": values.tolist()})
        if d != 2:
            raise ParameterError("table angular densities are implemented for d <= 2")
        n = values.size
        ext = np.append(values, values[0])

        def f(x):
            theta = np.mod(np.arctan2(x[..., 1], x[..., 0]), np.pi)
            pos = theta * n / np.pi
            i = np.minimum(pos.astype(int), n - 1)
            frac = pos - i
            return (1.0 - frac) * ext[i] + frac * ext[i + 1]

        return cls(2, f, values.min(), values.max(), "table", {"values": values.tolist()})

    @classmethod
    def from_callable(cls, d, func, n_probe=2000, seed=0):
        """Wrap an arbitrary callable; bounds are estimated on a probe set."""
        probe = probe_directions(d, n_probe, seed)
        vals = np.asarray(func(probe), dtype=float)
        dens = cls(d, func, vals.min(), vals.max())
        dens.validate(n_probe, seed)
        return dens

    @classmethod
    def from_spec(cls, d, kind, params):
        """Build from a ``kind`` string and parameter mapping (config files)."""
        params = dict(params or {})
        if kind == "constant":
            return cls.constant(d, params.get("value", 1.0))
        if kind == "cosine-poly":
            return cls.cosine_poly(d, params["coeffs"], params.get("axis"))
        if kind == "table":
            return cls.table(d, params["values"])
        raise ValidationError(f"unknown angular kind {kind!r}; expected one of {ANGULAR_KINDS}")

    def to_spec(self):
        if self.kind == "callable":
            raise ValidationError("callable angular densities cannot be serialised")
        return {"kind": self.kind, "params": self.params}

    def _retag(self, kind, params):
        self.kind, self.params = kind, params
        return self

    def validate(self, n_probe=500, seed=0):
        """Check positivity and evenness on a probe grid.

        Raises
        ------
        ValidationError
        """
        probe = probe_directions(self.d, n_probe, seed)
        plus, minus = self(probe), self(-probe)
        if not np.all(np.isfinite(plus)) or plus.min() <= 0 or self.lower_bound <= 0:
            raise ValidationError("angular density must be strictly positive")
        if not np.allclose(plus, minus, rtol=1e-12, atol=0):
            raise ValidationError("angular density must be even: a0(-x) = a0(x)")
        return self

    def __repr__(self):
        return f"AngularDensity(d={self.d}, kind={self.kind!r}, params={self.params})"


def probe_directions(d, n=500, seed=0):
    """Coordinate axes, diagonals and random unit vectors in R^d."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    rng = np.random.default_rng(seed)
    fixed = np.concatenate([np.eye(d), sphere.normalize(np.ones((1, d)))])
    return np.concatenate([fixed, sphere.normalize(rng.standard_normal((n, d)))])


# ----------------------------------------------------------------------------
# lattice helpers
# ----------------------------------------------------------------------------

def lattice_box(radius, d):
    """All lattice points of the cube [-radius, radius]^d, shape (m, d)."""
    r = np.arange(-radius, radius + 1)
    grids = np.meshgrid(*([r] * d), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def lattice_ball(radius, d, include_origin=False):
    """Lattice points with ``0 < |z| <= radius`` (origin optional)."""
    pts = lattice_box(int(math.floor(radius)), d)
    n2 = np.sum(pts * pts, axis=-1)
    keep = n2 <= radius * radius
    if not include_origin:
        keep &= n2 > 0
    return pts[keep]


def _half_ball_slices(radius, d):
    """Yield ``(points, multiplicity)`` covering the ball ``|z| <= radius``.

    Only slices with ``x_1 >= 0`` are produced; slices with ``x_1 > 0`` carry
    multiplicity 2, which is exact for even summands.
    """
    for x1 in range(0, radius + 1):
        r1 = math.isqrt(radius * radius - x1 * x1)
        if d == 1:
            rest = np.zeros((1, 0), dtype=np.int64)
        else:
            rest = lattice_box(r1, d - 1)
        pts = np.concatenate([np.full((rest.shape[0], 1), x1), rest], axis=1)
        yield pts, (2.0 if x1 > 0 else 1.0)


# ----------------------------------------------------------------------------
# the kernel
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class TailMass:
    """Mass beyond a radius with a two-sided bound ``lower <= value <= upper``."""

    value: float
    lower: float
    upper: float

    @property
    def error(self):
        return max(self.upper - self.value, self.value - self.lower)


@dataclass(frozen=True, eq=False)
class JumpKernel:
    """Normalised symmetric jump distribution (immutable).

    Do not instantiate directly; use :func:`build_kernel`.
    """

    d: int
    alpha: float
    angular: AngularDensity
    R_near: int
    c_norm: float
    R_box: int
    near_table: np.ndarray = field(repr=False)
    # unnormalised sums: shells of |z|^2 (d >= 2) and totals
    _norms2: np.ndarray = field(repr=False, default=None)
    _cum: np.ndarray = field(repr=False, default=None)
    kappa: float = 1.0

    @property
    def tail_angular(self):
        """The angular density of the normalised tail, ``c_norm * a0``."""
        return self.angular.scaled(self.c_norm)

    def mass(self, z):
        """Vectorised ``a(z)`` for integer points ``z`` of shape (..., d)."""
        return eval_mass(self, z)

    def tail_mass(self, R):
        return tail_mass(self, R)

    def near_points(self):
        """Lattice points and masses of the near table (``0 < |z| <= R_near``)."""
        pts = lattice_box(self.R_near, self.d)
        vals = self.near_table.ravel()
        keep = vals > 0
        return pts[keep], vals[keep]

    def to_dict(self):
        pts, vals = self.near_points()
        out = {
            "format": "stablewalk.kernel/1",
            "d": self.d,
            "alpha": self.alpha,
            "angular": self.angular.to_spec(),
            "R_near": self.R_near,
            "R_box": self.R_box,
            "c_norm": self.c_norm,
            "kappa": self.kappa,
            "near_table": [[*map(int, p), float(v)] for p, v in zip(pts, vals)],
        }
        if self._norms2 is not None:
            out["shells"] = {"norms2": self._norms2.tolist(), "cum": self._cum.tolist()}
        return out

    def to_json(self, path):
        from .io import atomic_write_text

        atomic_write_text(path, json.dumps(self.to_dict(), indent=1))


def build_kernel(d, alpha, angular=None, R_near=10, R_box=None):
    """Construct a normalised kernel ``a(z) = c_norm a0(z/|z|) |z|^(-d-alpha)``.

    Parameters
    ----------
    d : int
        Lattice dimension (1, 2 or 3).
    alpha : float
        Stability index in (0, 2).
    angular : AngularDensity, optional
        Defaults to the constant density 1.
    R_near : int
        Radius of the tabulated near field.
    R_box : int, optional
        Radius up to which shell sums are exact; defaults to
        ``max(R_near, 1000 // d)``.

    Returns
    -------
    JumpKernel

    Notes
    -----
    In d = 1 the normalisation is exact through the Riemann zeta function.
    For d >= 2 the lattice sum is exact inside ``R_box`` and the remainder is
    the integral ``int_{|x|>R_box} a0 |x|^(-d-alpha) dx`` with certified
    lattice-vs-integral bounds (see :func:`tail_mass`).
    """
    d = int(d)
    alpha = float(alpha)
    if not 0.0 < alpha < 2.0:
        raise ParameterError(f"alpha must lie in (0, 2), got {alpha}")
    if d < 1 or d > sphere.MAX_DIM:
        raise ParameterError(f"d must be in 1..{sphere.MAX_DIM}, got {d}")
    R_near = int(R_near)
    if R_near < 1:
        raise ParameterError("R_near must be >= 1")
    angular = AngularDensity.constant(d) if angular is None else angular
    if angular.d != d:
        raise ValidationError("angular density dimension does not match d")
    angular.validate()
    R_box = max(R_near, 1000 // d) if R_box is None else max(int(R_box), R_near)

    norms2 = cum = None
    if d == 1:
        total = 2.0 * float(angular(np.array([[1.0]]))[0]) * zeta(1.0 + alpha)
    else:
        norms2, cum = _shell_sums(d, alpha, angular, R_box)
        total = cum[-1] + _tail_integral(d, alpha, angular, R_box)
    c_norm = 1.0 / total

    pts = lattice_box(R_near, d)
    n2 = np.sum(pts * pts, axis=-1)
    table = np.zeros(pts.shape[0])
    inside = (n2 > 0) & (n2 <= R_near * R_near)
    table[inside] = c_norm * _raw_mass(pts[inside], alpha, angular)
    table = table.reshape((2 * R_near + 1,) * d)
    table.setflags(write=False)

    kernel = JumpKernel(d, alpha, angular, R_near, c_norm, R_box, table, norms2, cum)
    LOGGER.debug("built kernel d=%d alpha=%g c_norm=%.15g", d, alpha, c_norm)
    return kernel


def _raw_mass(z, alpha, angular):
    z = np.asarray(z, dtype=float)
    r = np.linalg.norm(z, axis=-1)
    return angular(z / r[..., None]) * r ** (-z.shape[-1] - alpha)


def _shell_sums(d, alpha, angular, R):
    """Unnormalised masses accumulated by ``|z|^2`` up to radius ``R``."""
    acc = np.zeros(R * R + 1)
    for pts, mult in _half_ball_slices(R, d):
        n2 = np.sum(pts * pts, axis=-1)
        keep = (n2 > 0) & (n2 <= R * R)
        acc += mult * np.bincount(n2[keep], weights=_raw_mass(pts[keep], alpha, angular),
                                  minlength=R * R + 1)
    norms2 = np.nonzero(acc)[0]
    cum = np.cumsum(acc[norms2])
    norms2.setflags(write=False)
    cum.setflags(write=False)
    return norms2, cum


def _tail_integral(d, alpha, angular, R):
    return angular.sphere_integral() * R ** (-alpha) / alpha


def _tail_bounds(d, alpha, angular, R):
    """Integral-comparison bounds for the unnormalised lattice tail beyond R."""
    h = math.sqrt(d) / 2.0
    area = sphere.surface_area(d)
    if R > 2 * h:
        upper = (angular.sup_bound * area * ((R - h) / (R - 2 * h)) ** (d - 1)
                 * (R - 2 * h) ** (-alpha) / alpha)
    else:
        upper = math.inf
    lower = (angular.lower_bound * area * ((R + h) / (R + 2 * h)) ** (d - 1)
             * (R + 2 * h) ** (-alpha) / alpha)
    return lower, upper


def eval_mass(kernel, z):
    """``a(z)`` for integer points ``z`` of shape (..., d); zero at the origin."""
    z = np.asarray(z)
    if z.ndim == 0 or (kernel.d == 1 and z.shape[-1:] != (1,)):
        z = z[..., None]
    zi = z.astype(np.int64)
    n2 = np.sum(zi * zi, axis=-1)
    out = np.zeros(n2.shape)
    near = (n2 > 0) & (n2 <= kernel.R_near ** 2)
    if near.any():
        idx = tuple(np.moveaxis(zi[near] + kernel.R_near, -1, 0))
        out[near] = kernel.near_table[idx]
    far = n2 > kernel.R_near ** 2
    if far.any():
        out[far] = kernel.c_norm * _raw_mass(zi[far], kernel.alpha, kernel.angular)
    return out


def tail_mass(kernel, R):
    """``sum_{|z| > R} a(z)`` with a two-sided bound.

    Parameters
    ----------
    kernel : JumpKernel
    R : float
        Radius, at least ``kernel.R_near``.

    Returns
    -------
    TailMass
    """
    if R < kernel.R_near:
        raise ParameterError(f"tail_mass needs R >= R_near={kernel.R_near}")
    c, a0, alpha, d = kernel.c_norm, kernel.angular, kernel.alpha, kernel.d
    if d == 1:
        v = 2.0 * c * float(a0(np.array([[1.0]]))[0]) * zeta(1.0 + alpha, math.floor(R) + 1.0)
        eps = 8 * np.finfo(float).eps * v
        return TailMass(v, v - eps, v + eps)
    if R <= kernel.R_box:
        i = np.searchsorted(kernel._norms2, R * R, side="right")
        inside = kernel._cum[i - 1] if i > 0 else 0.0
        shell = kernel._cum[-1] - inside
        rest = _tail_integral(d, alpha, a0, kernel.R_box)
        lo, hi = _tail_bounds(d, alpha, a0, kernel.R_box)
        return TailMass(c * (shell + rest), c * (shell + lo), c * (shell + hi))
    lo, hi = _tail_bounds(d, alpha, a0, R)
    v = _tail_integral(d, alpha, a0, R)
    return TailMass(c * v, c * lo, c * hi)


def box_mass(kernel, R):
    """``sum_{0 < |z| <= R} a(z)`` (exact shell sums)."""
    if kernel.d == 1 or R <= kernel.R_box:
        return 1.0 - tail_mass(kernel, R).value
    return float(np.sum(eval_mass(kernel, lattice_ball(R, kernel.d))))


def partial_second_moment(kernel, R):
    """``sum_{|z| <= R} |z|^2 a(z)``; diverges like ``R^(2 - alpha)``."""
    if kernel.d == 1:
        z = np.arange(1, int(R) + 1, dtype=float)
        return float(2.0 * np.sum(z * z * eval_mass(kernel, z[:, None])))
    pts = lattice_ball(R, kernel.d)
    return float(np.sum(np.sum(pts * pts, axis=-1) * eval_mass(kernel, pts)))


# ----------------------------------------------------------------------------
# config files and JSON cache
# ----------------------------------------------------------------------------

def kernel_spec_from_mapping(section):
    """Parse kernel keys (``d, alpha, angular.kind, angular.params, R_near``)."""
    try:
        d = int(section["d"])
        alpha = float(section["alpha"])
    except KeyError as exc:
        raise ValidationError(f"kernel config is missing key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ValidationError(f"bad kernel config value: {exc}") from None
    kind = section.get("angular.kind", "constant")
    raw = section.get("angular.params", "")
    params = _parse_params(kind, raw)
    spec = {"d": d, "alpha": alpha, "angular": {"kind": kind, "params": params},
            "R_near": int(section.get("R_near", 10))}
    if "R_box" in section:
        spec["R_box"] = int(section["R_box"])
    return spec


def _parse_params(kind, raw):
    if isinstance(raw, dict):
        return raw
    raw = (raw or "").strip()
    if not raw:
        return {}
    if raw.startswith("{"):
        try:
            return json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"angular.params is not valid JSON: {exc}") from None
    try:
        nums = [float(v) for v in raw.replace(",", " ").split()]
    except ValueError:
        raise ValidationError(f"cannot parse angular.params {raw!r}") from None
    key = {"constant": "value", "cosine-poly": "coeffs", "table": "values"}.get(kind)
    if key is None:
        raise ValidationError(f"unknown angular kind {kind!r}")
    return {key: nums[0]} if key == "value" else {key: nums}


def kernel_from_spec(spec):
    angular = AngularDensity.from_spec(spec["d"], spec["angular"]["kind"], spec["angular"]["params"])
    return build_kernel(spec["d"], spec["alpha"], angular, spec.get("R_near", 10), spec.get("R_box"))


def load_kernel_config(path, section="kernel"):
    """Read a kernel specification from an INI-style config file."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    if not parser.read(path):
        raise ValidationError(f"cannot read config file {path}")
    if section not in parser:
        raise ValidationError(f"config file {path} has no [{section}] section")
    return kernel_spec_from_mapping(parser[section])


def load_kernel_json(path):
    """Load a kernel from a JSON cache file written by :meth:`JumpKernel.to_json`.

    The stored shell sums are reused (they are the expensive part of a build
    for d >= 2).  The near table is recomputed from ``c_norm`` and compared with
    the stored one, and the shell total plus the continuum tail must reproduce
    ``1 / c_norm``.
    """
    with open(path) as fh:
        data = json.load(fh)
    if data.get("format") != "stablewalk.kernel/1":
        raise ValidationError(f"{path} is not a kernel cache file")
    d, alpha = int(data["d"]), float(data["alpha"])
    if "shells" not in data:
        kernel = kernel_from_spec(data)
        if not math.isclose(kernel.c_norm, data["c_norm"], rel_tol=1e-12):
            raise ValidationError("cached c_norm does not match the rebuilt kernel")
        return kernel
    angular = AngularDensity.from_spec(d, data["angular"]["kind"], data["angular"]["params"])
    R_near, R_box, c_norm = int(data["R_near"]), int(data["R_box"]), float(data["c_norm"])
    norms2 = np.asarray(data["shells"]["norms2"], dtype=np.int64)
    cum = np.asarray(data["shells"]["cum"], dtype=float)
    if norms2.size == 0 or norms2[-1] > R_box * R_box:
        raise ValidationError("cached shell sums do not fit R_box")
    total = cum[-1] + _tail_integral(d, alpha, angular, R_box)
    if not math.isclose(total * c_norm, 1.0, rel_tol=1e-12):
        raise ValidationError("cached shell sums do not reproduce c_norm")
    norms2.setflags(write=False)
    cum.setflags(write=False)
    pts = lattice_box(R_near, d)
    n2 = np.sum(pts * pts, axis=-1)
    table = np.zeros(pts.shape[0])
    inside = (n2 > 0) & (n2 <= R_near * R_near)
    table[inside] = c_norm * _raw_mass(pts[inside], alpha, angular)
    stored = np.zeros_like(table)
    rows = np.asarray(data["near_table"], dtype=float).reshape(-1, d + 1)
    idx = np.ravel_multi_index(tuple((rows[:, :d].astype(np.int64) + R_near).T), (2 * R_near + 1,) * d)
    stored[idx] = rows[:, d]
    if not np.allclose(stored, table, rtol=1e-12, atol=0.0):
        raise ValidationError("cached near table does not match the kernel formula")
    table = table.reshape((2 * R_near + 1,) * d)
    table.setflags(write=False)
    return JumpKernel(d, alpha, angular, R_near, c_norm, R_box, table, norms2, cum)


def cached_kernel(spec, cache_dir=None):
    """Build a kernel, reusing ``$STABLEWALK_CACHE`` JSON files when present."""
    cache_dir = cache_dir or os.environ.get("STABLEWALK_CACHE")
    if not cache_dir:
        return kernel_from_spec(spec)
    import hashlib

    key = hashlib.sha256(json.dumps(spec, sort_keys=True).encode()).hexdigest()[:16]
    path = os.path.join(cache_dir, f"kernel-{key}.json")
    if os.path.exists(path):
        try:
            return load_kernel_json(path)
        except (ValidationError, KeyError, json.JSONDecodeError):
            LOGGER.warning("ignoring stale kernel cache %s", path)
    kernel = kernel_from_spec(spec)
    os.makedirs(cache_dir, exist_ok=True)
    kernel.to_json(path)
    return kernel
