import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablewalk.density import (CutoffFunction, RegimeParams, cutoff_split,
                                example1_pmf_asymptote, example1_pmf_quadrature, pmf_fft)
from stablewalk.density.cutoff import cutoff_integral_I
from stablewalk.errors import ParameterError


@pytest.mark.parametrize("profile", ["exp", "exp2"])
def test_psi_plateau(profile):
    psi = CutoffFunction(profile)
    tau = np.linspace(-1, 1, 101)
    assert np.all(psi(tau) == 1.0)
    assert np.all(psi(np.array([2.0, 2.5, -3.0, 100.0])) == 0.0)
    assert psi(1.5) == pytest.approx(0.5, abs=1e-15)


@given(a=st.floats(1.0, 2.0), b=st.floats(1.0, 2.0))
def test_psi_monotone_and_bounded(a, b):
    psi = CutoffFunction()
    lo, hi = min(a, b), max(a, b)
    assert 0.0 <= psi(hi) <= psi(lo) <= 1.0
    assert psi(-a) == psi(a)


def test_psi_flat_at_joins():
    # all derivatives vanish at 1 and 2, so the profile hugs its plateaus
    psi = CutoffFunction()
    for h in (1e-2, 2e-2):
        assert 1.0 - psi(1.0 + h) < h**4
        assert psi(2.0 - h) < h**4


def test_unknown_profile():
    with pytest.raises(ParameterError):
        CutoffFunction("bump")


@pytest.mark.parametrize("d,alpha,delta,m", [(1, 0.75, 1.0, 2), (1, 1.0, 1.0, 3), (1, 1.5, 0.5, 3),
                                             (2, 1.5, 0.5, 4), (3, 0.5, 1.0, 4)])
def test_regime_params(d, alpha, delta, m):
    rp = RegimeParams(d, alpha)
    assert rp.delta == delta and rp.m == m
    assert 0 < rp.delta <= 1 and rp.m >= d + 1


@pytest.mark.parametrize("alpha,t", [(1.5, 10.0), (0.75, 20.0)])
def test_partition_identity(kernel_1d, kernel_1d_slow, alpha, t):
    kernel = kernel_1d if alpha == 1.5 else kernel_1d_slow
    xs = [3, 17, 60, 150]
    res = cutoff_split(kernel, t, xs)
    tab = pmf_fft(kernel, t, box_radius=max(xs), tol=1e-10)
    for r in res:
        p = float(tab.at(r.x))
        slack = 2 * math.pi * tab.err_bound + r.I_error + 2 * math.pi * r.I1_error
        assert abs(r.I + 2 * math.pi * r.I1 - 2 * math.pi * p) <= slack


def test_lemma_constant_bounded_t10(kernel_1d):
    t = 10.0
    xs = [int(round(rho * t ** (1 / 1.5))) for rho in (5, 10, 20)]
    C = [r.lemma_constant for r in cutoff_split(kernel_1d, t, xs)]
    assert max(C) / min(C) <= 10


def test_I_symmetric_and_converged(kernel_1d):
    psi = CutoffFunction()
    vals, err = cutoff_integral_I(kernel_1d, 10.0, np.array([-40, 40]), psi)
    assert vals[0] == vals[1] and err <= 1e-13
    fine, _ = cutoff_integral_I(kernel_1d, 10.0, np.array([40]), psi, N=1 << 14)
    assert fine[0] == pytest.approx(vals[1], abs=1e-13)


def test_split_errors(kernel_1d, kernel_2d_aniso):
    with pytest.raises(ParameterError):
        cutoff_split(kernel_2d_aniso, 10.0, [5])
    with pytest.raises(ParameterError):
        cutoff_split(kernel_1d, 0.5, [5])
    with pytest.raises(ParameterError):
        cutoff_split(kernel_1d, 10.0, [0, 5])


# -- continuum example ---------------------------------------------------------

def test_asymptote_trig_points():
    t, r = 0.7, math.pi / 2
    expected = t / (math.pi**2 * r**4) * (0.375 + 0.5 * math.exp(-0.75 * t) + 0.125 * math.exp(-t))
    assert example1_pmf_asymptote(t, r) == pytest.approx(expected, rel=1e-14)


def test_asymptote_large_t():
    r = 100.3
    for t in (30.0, 60.0):
        assert example1_pmf_asymptote(t, r) / (3 * t / (8 * math.pi**2 * r**4)) == pytest.approx(1.0, abs=1e-9)


def test_asymptote_rejects_origin():
    with pytest.raises(ParameterError):
        example1_pmf_asymptote(1.0, 0.0)


def test_quadrature_tracks_asymptote():
    t = 1.0
    scaled = []
    for r in (40.0, 80.0):
        val, err = example1_pmf_quadrature(t, r)
        assert err < 1e-3 * abs(val)
        scaled.append(r**5 / t * abs(val - example1_pmf_asymptote(t, r)))
    assert max(scaled) < 1.0
