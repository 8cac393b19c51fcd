"""A one-dimensional walk with alpha = 1.5 from kernel to limit laws.

Builds the kernel, computes p(t, x) by FFT, checks it against Monte Carlo,
and compares it with the stable density at growing times.

Run with ``python demos/one_dimensional_tour.py``.
"""
import numpy as np

from stablewalk import (StableDensity, build_kernel, central_report, estimate_pmf,
                        large_deviation_report, pmf_fft)

kernel = build_kernel(1, 1.5)
print(f"c_norm = {kernel.c_norm:.12f}")

# transition probabilities near the origin at t = 5
table = pmf_fft(kernel, 5.0, box_radius=10)
print(f"p(5, 0) = {table.at(0):.10f}, mass outside |x| <= 10: {table.outside_mass:.3e}")

# Monte Carlo agrees within its 99% intervals
emp = estimate_pmf(kernel, 5.0, 200_000, 10, seed=1)
lo, hi = emp.ci(0.99)
print(f"cells outside the MC interval: {np.sum((table.values < lo) | (table.values > hi))} / 21")

# central regime: t^(d/alpha) p(t, x) approaches S(t^(-1/alpha) x)
sd = StableDensity.from_kernel(kernel)
rep = central_report(kernel, sd, t_list=(25, 100, 400))
for t, e in rep.summary["E"].items():
    print(f"t = {t:5.0f}: max |ratio - 1| on |x| <= 3 t^(1/alpha) = {e:.4f}")

# far tail: p(t, x) approaches t a(x)
rep = large_deviation_report(kernel, t_list=(1.0,), rho_list=(10, 30, 100))
for r in rep.rows:
    if r["x"][0] > 0:
        print(f"x = {r['x'][0]:4d}: p / (t a0 |x|^(-1-alpha)) = {r['ratio']:.4f}")
