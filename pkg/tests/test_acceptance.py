"""The twelve acceptance criteria, each at its stated tolerance.

Every test prints one ``PASS Cn`` or ``FAIL Cn`` line (collected again in the
terminal summary) and then asserts the verdict, so a criterion that does not
hold shows up as a failing test.
"""
import math
import time

import numpy as np
import pytest
from scipy.stats import poisson

from stablewalk.density import (RegimeParams, StableDensity, cutoff_split, example1_pmf_asymptote,
                                example1_pmf_quadrature, example3_density, pmf_fft, pmf_series,
                                self_similarity_check, stable_density)
from stablewalk.kernel import AngularDensity, build_kernel
from stablewalk.limits import central_report, large_deviation_report, ray_directions
from stablewalk.spectral import (StableSymbol, char_fn, one_minus_ahat_grid, residual_slope,
                                 spectral_gap, stable_coeff, stable_prefactor, torus_grid)
from stablewalk.walker import estimate_pmf

pytestmark = pytest.mark.acceptance


def test_c1_oracle_equivalence(verdict):
    start = time.perf_counter()
    worst, parts = 0.0, []
    ok = True
    for alpha in (0.75, 1.0, 1.5):
        k = build_kernel(1, alpha)
        for t in (0.5, 1.0, 2.0):
            a = pmf_fft(k, t, box_radius=64, tol=1e-9)
            b = pmf_series(k, t, box_radius=64, tol=1e-9)
            diff = float(np.max(np.abs(a.values - b.values)))
            ok &= diff <= a.err_bound + b.err_bound and max(a.err_bound, b.err_bound) <= 1e-8
            worst = max(worst, diff / (a.err_bound + b.err_bound))
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 60
    parts.append(f"max diff / combined bound {worst:.3f}")
    parts.append(f"{elapsed:.1f}s")
    assert verdict(1, ok, ", ".join(parts))


def test_c2_central_regime(verdict):
    start = time.perf_counter()
    ok, parts = True, []
    for alpha in (0.75, 1.5):
        rep = central_report(build_kernel(1, alpha), t_list=(25, 100, 400), A=3.0)
        E = rep.summary["E"]
        ok &= rep.summary["strictly_decreasing"] and E[400.0] <= 0.1
        parts.append(f"alpha={alpha}: E=" + "/".join(f"{E[t]:.3g}" for t in (25.0, 100.0, 400.0)))
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 300
    assert verdict(2, ok, "; ".join(parts) + f", {elapsed:.1f}s")


def test_c3_large_deviation_regime(verdict):
    start = time.perf_counter()
    rep = large_deviation_report(build_kernel(1, 0.75), t_list=(1.0,), rho_list=(10, 30, 100),
                                 rel_tol=0.01)
    s = rep.summary
    certified = all(r["method"] == "series" and r["err_bound"] <= 0.01 * r["reference"]
                    for r in rep.rows)
    elapsed = time.perf_counter() - start
    ok = s["decreasing"] and s["last"] <= 0.1 and certified and elapsed <= 300
    devs = "/".join(f"{v:.3g}" for v in s["sup_dev"].values())
    assert verdict(3, ok, f"|ratio-1| = {devs} at rho 10/30/100, series bound <= 1% of reference: "
                          f"{certified}, {elapsed:.1f}s")


def test_c4_cauchy_closed_form(verdict):
    worst = 0.0
    for b in (0.5, 1.0, 2.0):
        sd = StableDensity.isotropic(1, 1.0, b)
        for y in (0.0, 1.0, 5.0, 20.0):
            exact = b / (math.pi * (b * b + y * y))
            worst = max(worst, abs(stable_density(sd, y) / exact - 1.0))
    assert verdict(4, worst <= 1e-6, f"max relative error {worst:.2e} (b = 0.5, 1, 2)")


def test_c5_positivity(verdict):
    start = time.perf_counter()
    radii = np.concatenate([[0.0], np.geomspace(1e-3, 100.0, 31)])
    smallest, count = math.inf, 0
    for alpha in (0.75, 1.0, 1.5):
        sd1 = StableDensity.isotropic(1, alpha, 1.0)
        vals = np.array([sd1(s * r) for r in radii for s in (1.0, -1.0)])
        smallest, count = min(smallest, vals.min()), count + vals.size
        for ang in (AngularDensity.constant(2), AngularDensity.cosine_poly(2, [1.0, 0.5])):
            sd2 = StableDensity(StableSymbol.from_angular(ang, alpha))
            vals = np.array([sd2(r * u) for r in radii for u in ray_directions(2)])
            smallest, count = min(smallest, vals.min()), count + vals.size
    elapsed = time.perf_counter() - start
    ok = smallest > 0 and elapsed <= 120
    assert verdict(5, ok, f"min S = {smallest:.3g} over {count} probes, {elapsed:.1f}s")


def test_c6_self_similarity(verdict):
    start = time.perf_counter()
    worst = 0.0
    for alpha in (1.0, 1.5):
        sd = StableDensity.isotropic(1, alpha, 1.0)
        for y in np.linspace(-10.0, 10.0, 41):
            conv, scaled = self_similarity_check(sd, y)
            worst = max(worst, abs(conv - scaled))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-4 and elapsed <= 120
    assert verdict(6, ok, f"max |S*S - 2^(-1/alpha) S(2^(-1/alpha) y)| = {worst:.2e}, {elapsed:.1f}s")


def test_c7_prefactor_limit(verdict):
    # the criterion as stated: C(1 +- 1e-4) within 1e-6 of pi/2
    near = [stable_prefactor(1.0 + s * 1e-4) for s in (-1, 1)]
    dev = max(abs(v - math.pi / 2) for v in near)
    literal = dev <= 1e-6
    # companion checks: the deviation is the first-order Taylor term, and the
    # implementation is continuous through alpha = 1 to rounding
    h = 1e-7
    slope = (stable_prefactor(1.0 + h) - stable_prefactor(1.0 - h)) / (2 * h)
    taylor = max(abs(v - math.pi / 2 - s * 1e-4 * slope) for v, s in zip(near, (-1, 1)))
    gamma_form = [-math.gamma(-a) * math.cos(a * math.pi / 2) for a in (1 - 1e-4, 1 + 1e-4)]
    agree = max(abs(g - v) for g, v in zip(gamma_form, near))
    half = stable_coeff(AngularDensity.constant(1, 1.0), 0.5, [1.0])
    half_ok = abs(half - 2.0 * math.sqrt(2.0 * math.pi)) <= 1e-10
    ok = literal and half_ok
    detail = (f"|C(1+-1e-4) - pi/2| = {dev:.2e} (> 1e-6, dC/dalpha = {slope:.4f}); "
              f"Taylor residual {taylor:.1e}, Gamma-form agreement {agree:.1e}; "
              f"alpha=0.5 b0 = 2 sqrt(2 pi): {half_ok}")
    assert verdict(7, ok, detail)


def test_c8_example1(verdict):
    start = time.perf_counter()
    from stablewalk.spectral import example1_charfn

    joins = [(2.0, 1.0 - 3.0 * 2.0 / 8.0, 2.0 / 2.0 - 1.0 + 2.0 / 8.0),
             (4.0, 2.0 / 4.0 - 1.0 + 4.0 / 8.0, 0.0)]
    continuous = all(left == right == float(example1_charfn(k)) for k, left, right in joins)
    t, scaled, errs = 1.0, [], []
    for r in (40.0, 80.0, 160.0):
        val, err = example1_pmf_quadrature(t, r)
        scaled.append(r**5 / t * abs(val - example1_pmf_asymptote(t, r)))
        errs.append(r**5 / t * err)
    elapsed = time.perf_counter() - start
    bounded = max(s + e for s, e in zip(scaled, errs)) <= 1.0
    ok = continuous and bounded and elapsed <= 300
    assert verdict(8, ok, "joins exact: {}; r^5/t |p - asymptote| = {} (quadrature {}), {:.1f}s".format(
        continuous, "/".join(f"{s:.3g}" for s in scaled), "/".join(f"{e:.1g}" for e in errs), elapsed))


def test_c9_example3_anisotropy(verdict):
    alpha = 1.5
    r = np.geomspace(100.0, 1000.0, 9)
    axis = np.array([example3_density(alpha, np.array([x, 0.0])) for x in r])
    diag = np.array([example3_density(alpha, np.array([x, x]) / math.sqrt(2)) for x in r])
    s_axis = np.polyfit(np.log(r), np.log(axis), 1)[0]
    s_diag = np.polyfit(np.log(r), np.log(diag), 1)[0]
    ok = abs(s_axis + (1 + alpha)) <= 0.1 and abs(s_diag + 2 * (1 + alpha)) <= 0.1
    assert verdict(9, ok, f"slopes axis {s_axis:.4f} (target {-(1 + alpha)}), "
                          f"diagonal {s_diag:.4f} (target {-2 * (1 + alpha)})")


def test_c10_monte_carlo(verdict):
    start = time.perf_counter()
    k = build_kernel(1, 1.5)
    t, n, seed = 5.0, 10**6, 20240611
    emp = estimate_pmf(k, t, n, 10, seed=seed, threads=4)
    exact = pmf_fft(k, t, box_radius=10).values
    lo, hi = emp.ci(0.99)
    outside = int(np.sum((exact < lo) | (exact > hi)))
    h = emp.jump_counts.astype(float)
    expected = n * poisson.pmf(np.arange(len(h)), t)
    expected[-1] += n * poisson.sf(len(h) - 1, t)
    keep = expected >= 5
    obs = np.append(h[keep], h[~keep].sum())
    exp = np.append(expected[keep], expected[~keep].sum())
    from scipy.stats import chisquare

    pval = float(chisquare(obs, exp).pvalue)
    again = estimate_pmf(k, t, n, 10, seed=seed, threads=1)
    identical = (np.array_equal(emp.counts, again.counts) and emp.overflow == again.overflow
                 and np.array_equal(emp.jump_counts, again.jump_counts))
    elapsed = time.perf_counter() - start
    ok = outside <= 2 and pval > 0.01 and identical and elapsed <= 120
    assert verdict(10, ok, f"{outside}/21 cells outside 99% CI, Poisson GOF p = {pval:.3f}, "
                           f"rerun bit-identical: {identical}, {elapsed:.1f}s")


def test_c11_lemma_bound(verdict):
    start = time.perf_counter()
    ok, parts = True, []
    for alpha in (0.75, 1.5):
        kern = build_kernel(1, alpha)
        m = RegimeParams(1, alpha).m
        C, dbl = [], []
        for t in (10.0, 20.0, 40.0):
            xs = [int(round(rho * t ** (1 / alpha))) for rho in (5, 10, 20)]
            res = cutoff_split(kern, t, xs + [2 * x for x in xs])
            C += [r.lemma_constant for r in res[:3]]
            dbl += [abs(a.I) / abs(b.I) for a, b in zip(res[:3], res[3:])]
        spread, target = max(C) / min(C), 2.0 ** (m - 0.5)
        good = spread <= 10 and min(dbl) >= target
        ok &= good
        parts.append(f"alpha={alpha} (m={m}): C max/min {spread:.2f}, "
                     f"min doubling {min(dbl):.2f} vs {target:.2f} -> {'ok' if good else 'fails'}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 300
    assert verdict(11, ok, "; ".join(parts) + f", {elapsed:.1f}s")


def test_c12_characteristic_function(verdict):
    start = time.perf_counter()
    kernels = [build_kernel(1, a) for a in (0.75, 1.0, 1.5)]
    kernels.append(build_kernel(2, 1.5, AngularDensity.cosine_poly(2, [1.0, 0.5])))
    ok, parts = True, []
    for kern in kernels:
        d, alpha = kern.d, kern.alpha
        n = 256 if d == 1 else 16  # 256 torus points either way
        tol = 1e-10 if d == 1 else 1e-4
        val, err = one_minus_ahat_grid(kern, n, tol)
        r = np.linalg.norm(torus_grid(n, d), axis=-1)
        below_one = bool(np.all(val[r > 0] - err[r > 0] > 0))
        gap = spectral_gap(kern, n, tol=tol)
        target = alpha + RegimeParams(d, alpha).delta - 0.15
        slope, ks, res = residual_slope(kern)
        resolved = bool(np.all(res > char_fn(kern, ks[:, None] * np.eye(d)[0]).trunc_error))
        good = below_one and gap > 0 and slope >= target and resolved
        ok &= good
        parts.append(f"d={d} alpha={alpha}: gap {gap:.3g}, slope {slope:.3f} >= {target:.2f}")
    elapsed = time.perf_counter() - start
    ok &= elapsed <= 60
    assert verdict(12, ok, "; ".join(parts) + f", {elapsed:.1f}s")
