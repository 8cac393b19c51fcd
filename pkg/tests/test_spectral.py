import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablewalk.density import RegimeParams
from stablewalk import smoothcut
from stablewalk.errors import ParameterError
from stablewalk.kernel import AngularDensity, build_kernel, eval_mass
from stablewalk.spectral import (StableSymbol, char_fn, example1_charfn, example1_symbol,
                                 one_minus_ahat, one_minus_ahat_grid, poisson_fold,
                                 residual_slope, spectral_gap, stable_coeff, stable_prefactor,
                                 torus_grid)

torus_1d = st.floats(-math.pi, math.pi).filter(lambda k: abs(k) > 1e-9)


# -- stable coefficient --------------------------------------------------------

@pytest.mark.parametrize("c", [1.0, 0.3, 2.5])
def test_b0_cauchy(c):
    assert stable_coeff(AngularDensity.constant(1, c), 1.0, [1.0]) == pytest.approx(math.pi * c, rel=1e-14)


def test_b0_alpha_half():
    val = stable_coeff(AngularDensity.constant(1, 1.0), 0.5, [1.0])
    assert val == pytest.approx(2.0 * math.sqrt(2.0 * math.pi), rel=1e-13)
    assert val == pytest.approx(5.01326, abs=1e-5)


def test_prefactor_matches_gamma_form():
    for alpha in (0.3, 0.75, 1.25, 1.5, 1.9):
        direct = -math.gamma(-alpha) * math.cos(alpha * math.pi / 2)
        assert stable_prefactor(alpha) == pytest.approx(direct, rel=1e-13)
    assert stable_prefactor(1.0) == pytest.approx(math.pi / 2, rel=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 2.0])
def test_prefactor_endpoints(alpha):
    with pytest.raises(ParameterError):
        stable_prefactor(alpha)


@pytest.mark.parametrize("d,alpha", [(2, 0.75), (2, 1.5), (3, 1.0), (3, 1.7)])
def test_b0_isotropic_is_constant(d, alpha):
    dirs = np.random.default_rng(7).standard_normal((100, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    vals = stable_coeff(AngularDensity.constant(d), alpha, dirs)
    assert vals.max() - vals.min() <= 1e-12 * vals.mean()


def test_b0_isotropic_closed_form_d3():
    # int_{S^2} |x.k|^alpha dS = 4 pi / (alpha + 1)
    alpha = 1.3
    val = stable_coeff(AngularDensity.constant(3), alpha, [0.0, 0.0, 1.0])
    assert val == pytest.approx(stable_prefactor(alpha) * 4 * math.pi / (alpha + 1), rel=1e-12)


def test_b0_even_in_direction():
    ang = AngularDensity.cosine_poly(2, [1.0, 0.5])
    dirs = np.random.default_rng(3).standard_normal((20, 2))
    assert np.allclose(stable_coeff(ang, 1.5, dirs), stable_coeff(ang, 1.5, -dirs), rtol=1e-14)


def test_stable_symbol_homogeneous():
    sym = StableSymbol.from_angular(AngularDensity.cosine_poly(2, [1.0, 0.5]), 1.5)
    k = np.array([[0.3, -0.2]])
    assert sym(3.0 * k)[0] == pytest.approx(3.0 ** 1.5 * sym(k)[0], rel=1e-14)


# -- characteristic function ---------------------------------------------------

def test_ahat_at_zero(kernel_1d, kernel_2d_aniso):
    assert char_fn(kernel_1d, 0.0).ahat == 1.0
    assert char_fn(kernel_2d_aniso, [0.0, 0.0]).ahat == pytest.approx(1.0, abs=1e-15)


def test_d1_against_direct_sum():
    # independent oracle: brute-force cosine series to |z| = 10^6 plus tail bound
    k = build_kernel(1, 1.5)
    z = np.arange(1, 10**6 + 1, dtype=float)
    w = eval_mass(k, z[:, None])
    tail = k.tail_mass(10**6).value
    for kk in (0.01, 0.3, 1.7, math.pi):
        direct = 2.0 * np.sum(w * (1.0 - np.cos(kk * z)))
        val, err = one_minus_ahat(k, kk)
        assert abs(val - direct) <= 2 * tail + 1e-12


def test_d1_alpha1_small_k_limit():
    k = build_kernel(1, 1.0)
    for kk in (1e-2, 1e-3):
        val, _ = one_minus_ahat(k, kk)
        assert val / (k.c_norm * math.pi * kk) == pytest.approx(1.0, rel=0.02)


def test_grid_matches_pointwise(kernel_2d_aniso):
    N = 16
    grid, gerr = one_minus_ahat_grid(kernel_2d_aniso, N)
    pts = torus_grid(N, 2).reshape(-1, 2)
    val, err = one_minus_ahat(kernel_2d_aniso, pts[::37])
    assert np.all(np.abs(grid.reshape(-1)[::37] - val) <= gerr.reshape(-1)[::37] + err + 1e-12)


@given(k=torus_1d, alpha=st.floats(0.3, 1.9))
def test_ahat_below_one_and_even_d1(k, alpha):
    kern = build_kernel(1, alpha)
    ev, ev_neg = char_fn(kern, k), char_fn(kern, -k)
    assert ev.ahat < 1.0
    assert ev.ahat == pytest.approx(ev_neg.ahat, abs=1e-15)
    assert -1.0 <= ev.ahat


@given(k=st.lists(st.floats(-math.pi, math.pi), min_size=2, max_size=2))
def test_ahat_even_d2(kernel_2d_aniso, k):
    k = np.array(k)
    if np.linalg.norm(k) < 1e-3:
        return
    a, b = one_minus_ahat(kernel_2d_aniso, k), one_minus_ahat(kernel_2d_aniso, -k)
    assert a[0] == pytest.approx(b[0], abs=1e-14)
    assert a[0] - a[1] > 0


def test_spectral_gap_positive_and_refinement():
    k = build_kernel(1, 1.0)
    b0 = math.pi * k.c_norm
    g = [spectral_gap(k, n) for n in (16, 32, 64, 256, 4096)]
    assert all(v > 0 for v in g)
    assert all(b >= a - 1e-15 for a, b in zip(g[1:], g[:-1]))
    assert g[-1] <= b0 * 1.05


def test_spectral_gap_d2(kernel_2d_aniso):
    assert spectral_gap(kernel_2d_aniso, 32, tol=1e-4) > 0


def test_spectral_gap_rejects_tiny_grid(kernel_1d):
    with pytest.raises(ParameterError):
        spectral_gap(kernel_1d, 4)


@pytest.mark.parametrize("alpha", [0.5, 0.75, 1.0, 1.5, 1.8])
def test_residual_order(alpha):
    kern = build_kernel(1, alpha)
    slope, _, _ = residual_slope(kern)
    assert slope >= alpha + RegimeParams(1, alpha).delta - 0.15


# -- continuum example ---------------------------------------------------------

def test_example1_charfn_values():
    assert example1_charfn(1.0) == 5.0 / 8.0
    assert example1_charfn(2.0) == 0.25
    assert 2.0 / 2.0 - 1.0 + 2.0 / 8.0 == 0.25
    assert example1_charfn(4.0) == 0.0
    assert 2.0 / 4.0 - 1.0 + 4.0 / 8.0 == 0.0
    assert example1_charfn(np.array([[0.0, 0.0, 0.0]]))[0] == 1.0


def test_example1_symbol_is_leading_term():
    k = np.array([[1e-3, 0.0, 0.0]])
    assert 1.0 - example1_charfn(k)[0] == pytest.approx(example1_symbol()(k)[0], rel=1e-12)


def test_poisson_fold_inside_fundamental_region():
    rng = np.random.default_rng(1)
    k = rng.uniform(-1, 1, (200, 3))
    k *= (2 * math.pi - 4.0 - 1e-9) * rng.random((200, 1)) / np.linalg.norm(k, axis=1, keepdims=True)
    folded = poisson_fold(example1_charfn, 4.0, k)
    assert np.max(np.abs(folded - example1_charfn(k))) <= 1e-12
    assert poisson_fold(example1_charfn, 4.0, np.zeros((1, 3)))[0] == 1.0


def test_poisson_fold_images_near_boundary():
    # at k = (pi, 0, 0) the shift by -2 pi lands at |k| = pi as well
    k = np.array([[math.pi, 0.0, 0.0]])
    assert poisson_fold(example1_charfn, 4.0, k)[0] == pytest.approx(2 * example1_charfn(k)[0])


def test_poisson_fold_narrow_support():
    def bump(k):
        return np.maximum(0.0, 1.0 - np.linalg.norm(k, axis=-1))

    k = np.random.default_rng(2).uniform(-math.pi, math.pi, (100, 2))
    assert np.array_equal(poisson_fold(bump, 1.0, k), bump(k))


def test_poisson_fold_bad_radius():
    with pytest.raises(ParameterError):
        poisson_fold(example1_charfn, math.inf, np.zeros((1, 3)))


# -- smooth-cutoff far field ---------------------------------------------------

def test_smoothcut_zeta4_bound():
    # sum over Z^2 \ 0 of |n|^-4 = 4 zeta(2) beta(2)
    exact = 4 * (math.pi**2 / 6) * 0.915965594177219
    assert exact <= smoothcut._lattice_zeta4(2) <= exact * 1.001


def test_smoothcut_cutoff_profile():
    s = np.array([0.0, 0.5, 0.75, 1.0, 1.5])
    assert np.allclose(smoothcut.cutoff(s), [1.0, 1.0, 0.5, 0.0, 0.0], atol=1e-15)
    assert smoothcut._smoothstep_sups()[0] == pytest.approx(1.0)


def test_smoothcut_alias_scaling(kernel_2d_aniso):
    a, b = (smoothcut.alias_bound(kernel_2d_aniso, R, 0.1) for R in (100.0, 200.0))
    assert a / b == pytest.approx(2.0 ** 5.5, rel=1e-12)
    assert smoothcut.alias_bound(kernel_2d_aniso, 100.0, 7.0) == math.inf


def test_smoothcut_support():
    assert smoothcut.supports(build_kernel(2, 1.2))
    assert not smoothcut.supports(build_kernel(1, 1.2))
    assert not smoothcut.supports(build_kernel(2, 1.2, AngularDensity.table(2, [1.0, 2.0, 1.5])))


@pytest.mark.parametrize("lam", [0.003, 0.05, 0.4, 2.0])
def test_smoothcut_q_against_quad(lam):
    from scipy.integrate import quad

    R, alpha = 40.0, 1.3
    f = lambda r: -r ** (-1 - alpha) * smoothcut.cutoff(r / R) * 2 * math.sin(0.5 * lam * r) ** 2
    ref = quad(f, 0, R / 2, limit=400)[0] + quad(f, R / 2, R, limit=400)[0]
    q, err = smoothcut.correction_q(np.array([lam]), R, alpha)
    assert q[0] == pytest.approx(ref, rel=1e-9, abs=1e-14)
    assert err <= 1e-12 * max(1.0, abs(ref))


@pytest.mark.parametrize("d,alpha,angular", [(2, 1.5, [1.0, 0.5]), (2, 0.75, None), (3, 1.2, None)])
def test_smoothcut_inside_sharp_interval_and_radius_free(d, alpha, angular):
    ang = AngularDensity.cosine_poly(d, angular) if angular else None
    kern = build_kernel(d, alpha, ang)
    rng = np.random.default_rng(d)
    ks = rng.uniform(-1, 1, (4, d)) * np.array([[0.3], [0.05], [0.01], [0.002]])
    stable = StableSymbol.from_kernel(kern)(ks)
    v1, e1 = smoothcut.one_minus_ahat_smooth(kern, ks, 1e-6, stable)
    v2, e2 = smoothcut.one_minus_ahat_smooth(kern, ks, 1e-10, stable)
    # different radii, same answer within the certified errors
    assert np.all(np.abs(v1 - v2) <= e1 + e2)
    from stablewalk.spectral import _direct

    vs, es, _ = _direct(kern, ks, 1e-10)
    assert np.all(np.abs(v2 - vs) <= e2 + es)
    assert np.all(e2 < es)


def test_d2_residual_certified(kernel_2d_aniso):
    slope, ks, res = residual_slope(kernel_2d_aniso)
    err = char_fn(kernel_2d_aniso, ks[:, None] * np.array([1.0, 0.0])).trunc_error
    assert np.all(res > 100 * err)
    assert slope == pytest.approx(2.0, abs=0.01)
