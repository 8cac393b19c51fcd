"""An anisotropic walk in the plane, a0(theta) proportional to 1 + 0.5 cos(theta)^2.

Shows the certified symbol near k = 0, its stable approximation and the
residual slope, then the transition probabilities on a small box.

Run with ``python demos/anisotropic_plane.py``.
"""
import numpy as np

from stablewalk import AngularDensity, build_kernel, char_fn, pmf_fft, spectral_gap
from stablewalk.spectral import residual_slope

kernel = build_kernel(2, 1.5, AngularDensity.cosine_poly(2, [1.0, 0.5]))

ks = np.array([[0.1, 0.0], [0.0, 0.1], [0.07, 0.07]])
ev = char_fn(kernel, ks)
for k, v, s, e in zip(ks, ev.one_minus_ahat, -ev.stable_approx, ev.trunc_error):
    print(f"k = {k}: 1 - ahat = {v:.12f} +- {e:.1e}, b0 |k|^alpha = {s:.12f}")

for direction in ([1.0, 0.0], [0.0, 1.0], [1.0, 1.0]):
    slope, _, res = residual_slope(kernel, direction)
    print(f"direction {direction}: residual slope {slope:.3f}, smallest residual {res.min():.2e}")

print(f"spectral gap on a 16 x 16 grid: {spectral_gap(kernel, grid_n=16, tol=1e-4):.4f}")

table = pmf_fft(kernel, 4.0, box_radius=6, tol=1e-4)
print(f"p(4, 0) = {table.at([0, 0]):.6f}, p(4, e1) = {table.at([1, 0]):.6f}, "
      f"p(4, e2) = {table.at([0, 1]):.6f}")
