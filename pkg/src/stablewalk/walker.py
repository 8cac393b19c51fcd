"""Monte Carlo simulation of the continuous-time walk.

Jumps are drawn exactly from ``a``: near sites (``|z| <= R_near``) come from
a Vose alias table, far sites from a rejection sampler.  The far sampler
proposes a continuous point ``X`` with density ``~ |x|^(-d-alpha)`` on
``|x| > rho0`` (Pareto radius, uniform direction), rounds it to the nearest
lattice point ``z`` and accepts with probability

    a0(z/|z|) |z|^(-d-alpha) / (M sup(a0) |X|^(-d-alpha)).

Every unit cell of a far site lies inside the proposal region (``rho0`` is
the smallest far radius minus ``sqrt(d)/2``), so integrating the accepted
density over the cell gives exactly ``a0 |z|^(-d-alpha)``; ``M`` is the
largest possible ``(|X| / |z|)^(d+alpha)`` over a cell.

The jump count on ``[0, t]`` is Poisson(t) (unit rate).  Samples are
generated in fixed-size chunks; chunk ``i`` uses a Philox stream keyed by
``(seed, i)`` and chunk results are merged in index order, so the output
does not depend on the number of worker threads.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm

from .errors import IntegrityError, ParameterError
from .kernel import lattice_box

LOGGER = logging.getLogger(__name__)

MAX_REJECTION_ROUNDS = 1_000_000
CHUNK_SIZE = 1 << 16
# jump coordinates saturate here so int64 sums of up to 2^10 jumps cannot overflow
MAX_COORD = float(1 << 52)


@dataclass(frozen=True, eq=False)
class SamplerTables:
    """Precomputed, immutable sampling data for one kernel."""

    d: int
    alpha: float
    near_points: np.ndarray = field(repr=False)
    near_mass: np.ndarray = field(repr=False)
    alias_prob: np.ndarray = field(repr=False)
    alias_index: np.ndarray = field(repr=False)
    tail_prob: float
    R_near: int
    rho0: float
    envelope: float
    angular: object = field(repr=False)

    @property
    def acceptance_floor(self):
        """Lower bound on the tail acceptance probability."""
        return self.angular.lower_bound / (self.angular.sup_bound * self.envelope)


def alias_table(p):
    """Vose's alias table for probabilities ``p`` (normalized internally).

    Returns
    -------
    prob : ndarray
        Acceptance threshold per column.
    alias : ndarray of int
        Fallback index per column.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or len(p) == 0 or np.any(p < 0) or not np.isfinite(p).all():
        raise ParameterError("alias table needs a non-empty vector of finite non-negative weights")
    n = len(p)
    scaled = p * (n / p.sum())
    prob = np.ones(n)
    alias = np.arange(n)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, g = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] -= 1.0 - scaled[s]
        (small if scaled[g] < 1.0 else large).append(g)
    # leftovers are 1 up to rounding
    return prob, alias


def build_sampler(kernel):
    """Alias table over the near sites plus the far-site rejection parameters."""
    pts, mass = kernel.near_points()
    prob, alias = alias_table(mass)
    tail = kernel.tail_mass(kernel.R_near).value
    d = kernel.d
    # smallest norm among lattice points with |z| > R_near
    r2 = kernel.R_near**2 + 1
    if d == 1:
        r_min = float(kernel.R_near + 1)
    else:
        probe = lattice_box(kernel.R_near + 1, d)
        n2 = np.sum(probe * probe, axis=1)
        r_min = math.sqrt(float(n2[n2 >= r2].min()))
    h = 0.5 * math.sqrt(d)
    rho0 = r_min - h
    envelope = (1.0 + h / r_min) ** (d + kernel.alpha)
    return SamplerTables(d, kernel.alpha, pts, mass, prob, alias, tail, kernel.R_near,
                         rho0, envelope, kernel.angular)


def _uniform_directions(rng, n, d):
    if d == 1:
        return np.where(rng.random(n) < 0.5, -1.0, 1.0)[:, None]
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sample_tail(tables, rng, n):
    d, alpha = tables.d, tables.alpha
    out = np.empty((n, d), dtype=np.int64)
    todo = np.arange(n)
    sup = tables.angular.sup_bound
    rounds = 0
    while todo.size:
        rounds += 1
        if rounds > MAX_REJECTION_ROUNDS:
            raise IntegrityError("tail rejection sampler exceeded its iteration cap; "
                                 "sampler tables look corrupted")
        m = todo.size
        radius = tables.rho0 * (1.0 - rng.random(m)) ** (-1.0 / alpha)
        x = radius[:, None] * _uniform_directions(rng, m, d)
        u = rng.random(m)
        z = np.rint(np.clip(x, -MAX_COORD, MAX_COORD))
        zn = np.linalg.norm(z, axis=1)
        ok = zn > tables.R_near
        huge = radius >= MAX_COORD
        ratio = np.zeros(m)
        exact = ok & ~huge
        if exact.any():
            zo, zno = z[exact], zn[exact]
            ratio[exact] = (tables.angular(zo / zno[:, None]) / sup
                            * (radius[exact] / zno) ** (d + alpha) / tables.envelope)
        if huge.any():
            # rounding is invisible at this scale; the jump is kept (saturated) so its mass escapes
            xd = x[huge] / radius[huge, None]
            ratio[huge] = tables.angular(xd) / sup / tables.envelope
        if np.any(ratio > 1.0 + 1e-12):
            raise IntegrityError("tail acceptance ratio above 1: envelope constant is wrong")
        acc = ok & (u < ratio)
        out[todo[acc]] = z[acc].astype(np.int64)
        todo = todo[~acc]
    return out


def sample_jumps(tables, rng, n):
    """Draw ``n`` independent jumps; returns an (n, d) int64 array.

    The law is exact for ``|z| < 2^52``; longer jumps (probability about
    ``(R_near / 2^52)^alpha``) keep their direction but have coordinates
    saturated at ``+-2^52``.
    """
    n = int(n)
    d = tables.d
    out = np.empty((n, d), dtype=np.int64)
    if n == 0:
        return out
    is_tail = rng.random(n) < tables.tail_prob
    k = int((~is_tail).sum())
    cols = rng.integers(0, len(tables.alias_prob), size=k)
    keep = rng.random(k) < tables.alias_prob[cols]
    idx = np.where(keep, cols, tables.alias_index[cols])
    out[~is_tail] = tables.near_points[idx]
    nt = n - k
    if nt:
        out[is_tail] = _sample_tail(tables, rng, nt)
    return out


def sample_jump(tables, rng):
    """A single jump as a length-d integer array."""
    return sample_jumps(tables, rng, 1)[0]


def _endpoints(tables, t, rng, n):
    counts = rng.poisson(t, size=n)
    total = int(counts.sum())
    jumps = sample_jumps(tables, rng, total)
    ends = np.zeros((n, tables.d), dtype=np.int64)
    has = counts > 0
    if total:
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]])
        ends[has] = np.add.reduceat(jumps, starts[has], axis=0)
    return ends, counts


def simulate_endpoint(tables, t, rng):
    """Position at time ``t`` of one walk started at the origin."""
    t = float(t)
    if not t >= 0:
        raise ParameterError("t must be >= 0")
    return _endpoints(tables, t, rng, 1)[0][0]


def chunk_rng(seed, index):
    """Counter-based generator for chunk ``index`` of a run with ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(index),))
    return np.random.Generator(np.random.Philox(ss))


@dataclass
class EmpiricalPmf:
    """Histogram of simulated endpoints inside ``[-box_radius, box_radius]^d``."""

    t: float
    d: int
    box_radius: int
    n_samples: int
    counts: np.ndarray
    overflow: int
    jump_counts: np.ndarray
    seed: int
    meta: dict = field(default_factory=dict)

    @property
    def phat(self):
        return self.counts / self.n_samples

    def half_width(self, level=0.99):
        """Normal-approximation confidence half-width per cell."""
        z = norm.ppf(0.5 + 0.5 * level)
        p = self.phat
        return z * np.sqrt(p * (1.0 - p) / self.n_samples)

    def ci(self, level=0.99):
        hw = self.half_width(level)
        return self.phat - hw, self.phat + hw

    def at(self, x):
        x = np.asarray(x, dtype=np.int64)
        if self.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        idx = tuple(np.moveaxis(x + self.box_radius, -1, 0))
        return self.counts[idx]

    def to_pmf_table(self, level=0.99):
        from .density.pmf import PmfTable

        return PmfTable(self.t, self.box_radius, self.d, self.phat, "mc",
                        float(self.half_width(level).max()),
                        {"n_samples": self.n_samples, "seed": self.seed, "level": level})

    def rows(self, level=0.99):
        pts = lattice_box(self.box_radius, self.d)
        lo, hi = self.ci(level)
        return pts, self.counts.ravel(), self.phat.ravel(), lo.ravel(), hi.ravel()

    def to_csv(self, path, level=0.99):
        from .io import write_csv

        pts, c, p, lo, hi = self.rows(level)
        xcols = ["x"] if self.d == 1 else [f"x{i + 1}" for i in range(self.d)]
        rows = [[*map(int, pt), int(ci), repr(float(pi)), repr(float(l)), repr(float(h))]
                for pt, ci, pi, l, h in zip(pts, c, p, lo, hi)]
        write_csv(path, xcols + ["count", "phat", "ci_lo", "ci_hi"], rows)

    def to_dict(self, level=0.99):
        pts, c, p, lo, hi = self.rows(level)
        return {"t": self.t, "d": self.d, "box_radius": self.box_radius,
                "n_samples": self.n_samples, "overflow": self.overflow, "seed": self.seed,
                "level": level, "meta": self.meta, "x": pts.tolist(), "count": c.tolist(),
                "phat": p.tolist(), "ci_lo": lo.tolist(), "ci_hi": hi.tolist(),
                "jump_counts": self.jump_counts.tolist()}

    def to_json(self, path, level=0.99):
        from .io import write_json

        write_json(path, self.to_dict(level))


def _run_chunk(tables, t, seed, index, size, box_radius):
    rng = chunk_rng(seed, index)
    ends, jumps = _endpoints(tables, t, rng, size)
    inside = np.all(np.abs(ends) <= box_radius, axis=1)
    width = 2 * box_radius + 1
    flat = np.ravel_multi_index(tuple((ends[inside] + box_radius).T), (width,) * tables.d)
    counts = np.bincount(flat, minlength=width**tables.d)
    return counts, int((~inside).sum()), np.bincount(jumps)


def estimate_pmf(kernel, t, n_samples, box_radius, seed, threads=1, chunk_size=CHUNK_SIZE,
                 tables=None):
    """Empirical ``p(t, x)`` on a box from ``n_samples`` independent walks.

    Parameters
    ----------
    kernel : JumpKernel
    t : float
    n_samples : int
    box_radius : int
    seed : int
    threads : int
        Worker threads; the result is identical for any value.
    chunk_size : int
        Paths per RNG substream.  Part of the reproducibility contract: the
        same seed with a different chunk size gives a different sample.
    tables : SamplerTables, optional
        Reuse precomputed tables.

    Returns
    -------
    EmpiricalPmf
    """
    t = float(t)
    n_samples = int(n_samples)
    if n_samples < 1:
        raise ParameterError("n_samples must be >= 1")
    if not t >= 0:
        raise ParameterError("t must be >= 0")
    box_radius = int(box_radius)
    tables = tables or build_sampler(kernel)
    sizes = [chunk_size] * (n_samples // chunk_size)
    if n_samples % chunk_size:
        sizes.append(n_samples % chunk_size)
    jobs = [(tables, t, seed, i, s, box_radius) for i, s in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=int(threads)) as ex:
            results = list(ex.map(lambda a: _run_chunk(*a), jobs))
    else:
        results = [_run_chunk(*a) for a in jobs]
    width = 2 * box_radius + 1
    counts = np.zeros(width**kernel.d, dtype=np.int64)
    overflow = 0
    hist = np.zeros(1, dtype=np.int64)
    for c, o, h in results:
        counts += c
        overflow += o
        if len(h) > len(hist):
            hist = np.pad(hist, (0, len(h) - len(hist)))
        hist[: len(h)] += h
    return EmpiricalPmf(t, kernel.d, box_radius, n_samples, counts.reshape((width,) * kernel.d),
                        overflow, hist, int(seed), {"chunk_size": chunk_size, "chunks": len(sizes)})
