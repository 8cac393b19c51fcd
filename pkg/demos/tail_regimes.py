"""Where the one-jump picture takes over for alpha = 0.75.

Splits p(t, x) with a Fourier cutoff into a smooth part I and a singular
part I_1, and tracks how the tail ratio settles as |x| grows.

Run with ``python demos/tail_regimes.py``.
"""
from stablewalk import CutoffFunction, build_kernel, lemma_bounds_report

kernel = build_kernel(1, 0.75)
rep = lemma_bounds_report(kernel, CutoffFunction("exp"), t_list=(10, 20), rho_list=(5, 10, 20))
print(f"max |I + 2 pi I_1 - 2 pi p| = {rep.summary['max_partition_residual']:.2e}")
print(" t    rho   p / tail   I_1 / tail")
for r in rep.rows:
    print(f"{r['t']:3.0f}  {r['rho']:4.0f}   {r['ldp_ratio']:.4f}     {r['I1_ratio']:.4f}")
