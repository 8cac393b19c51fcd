import math

import numpy as np
import pytest

from stablewalk.density import CutoffFunction, StableDensity
from stablewalk.errors import ParameterError
from stablewalk.kernel import AngularDensity, build_kernel
from stablewalk.limits import (central_report, large_deviation_report, lemma_bounds_report,
                               overlap_check, ray_directions)


@pytest.fixture(scope="module")
def central_1d(kernel_1d):
    return central_report(kernel_1d, t_list=(25, 100, 400), A=3.0)


def test_central_ladder(central_1d):
    E = central_1d.summary["E"]
    assert central_1d.summary["strictly_decreasing"]
    assert E[400.0] < E[25.0] and E[400.0] <= 0.1


def test_central_origin_ratio(central_1d):
    origin = central_1d.summary["origin_ratio"]
    dev = [abs(origin[t] - 1.0) for t in (25.0, 100.0, 400.0)]
    assert dev[0] > dev[1] > dev[2] and dev[2] <= 0.1


def test_central_rows_symmetric_and_positive(central_1d):
    rows = {(r["t"], r["x"]): r["ratio"] for r in central_1d.rows}
    for (t, x), ratio in rows.items():
        assert ratio > 0
        assert ratio == pytest.approx(rows[(t, (-x[0],))], rel=1e-9)
    for r in central_1d.rows:
        assert r["reference"] > 0 and r["ratio"] == pytest.approx(r["p"] / r["reference"], rel=1e-12)


def test_ldp_ladder(kernel_1d_slow):
    rep = large_deviation_report(kernel_1d_slow, t_list=(1.0,), rho_list=(10, 30, 100))
    assert rep.summary["decreasing"] and rep.summary["last"] <= 0.1
    assert all(r["err_bound"] <= 0.01 * r["reference"] for r in rep.rows)
    assert all(r["ratio"] > 0 for r in rep.rows)


def test_ldp_single_jump_regime(kernel_1d_slow):
    # t = 0.1, |x| = 100: the one-jump term dominates
    t = 0.1
    rho = 100 / t ** (1 / 0.75)
    rep = large_deviation_report(kernel_1d_slow, t_list=(t,), rho_list=(rho,))
    assert {r["x"] for r in rep.rows} == {(100,), (-100,)}
    for r in rep.rows:
        assert abs(r["ratio"] - 1.0) <= 0.05


def test_ldp_reference_follows_direction():
    ang = AngularDensity.cosine_poly(2, [1.0, 1.0])
    k = build_kernel(2, 1.5, angular=ang)
    a0 = k.tail_angular
    e1, e2 = np.array([[1.0, 0.0]]), np.array([[0.0, 1.0]])
    assert a0(e1)[0] / a0(e2)[0] == pytest.approx(2.0, rel=1e-14)
    rep = large_deviation_report(k, t_list=(1.0,), rho_list=(10,), rel_tol=0.5)
    ref = {r["x"]: r["reference"] for r in rep.rows}
    assert ref[(10, 0)] / ref[(0, 10)] == pytest.approx(2.0, rel=1e-14)


def test_ldp_rejects_origin(kernel_1d):
    with pytest.raises(ParameterError):
        large_deviation_report(kernel_1d, t_list=(1e-3,), rho_list=(5,))


def test_lemma_report_alpha_0_75(kernel_1d_slow):
    rep = lemma_bounds_report(kernel_1d_slow, CutoffFunction("exp"))
    s = rep.summary
    assert s["C_spread"] <= 10 and s["doubling_ok"]
    assert s["doubling_target"] == pytest.approx(2 ** 1.5)
    # the cutoff pieces recombine into the pmf
    assert s["max_partition_residual"] <= 1e-8
    # I1 and p differ by I / (2 pi), so the two ratios differ by the relative size of I
    for r in rep.rows:
        ref = r["p"] / r["ldp_ratio"]
        gap = r["I1_ratio"] - r["ldp_ratio"] + r["I"] / (2 * math.pi * ref)
        assert abs(gap) <= 2e-4
    for t in (10.0, 20.0, 40.0):
        dev = [abs(r["I1_ratio"] - 1) for r in rep.rows if r["t"] == t]
        assert dev[0] > dev[1] > dev[2]


def test_lemma_report_rejects_d2(kernel_2d_aniso):
    with pytest.raises(ParameterError):
        lemma_bounds_report(kernel_2d_aniso)


@pytest.mark.parametrize("alpha", [0.75, 1.5])
def test_overlap_zone(alpha):
    k = build_kernel(1, alpha)
    sd = StableDensity.from_kernel(k)
    res = overlap_check(k, sd, rho_list=(5.0, 7.0, 10.0))
    devs = [abs(v - 1.0) for v in res["ratio"].values()]
    assert devs[0] > devs[1] > devs[2]
    # the gap is the next term of the large-|y| series of S, of order rho^(-alpha)
    scaled = [abs(v - 1.0) * rho**alpha for rho, v in res["ratio"].items()]
    assert max(scaled) / min(scaled) <= 1.2
    # independent of t
    assert overlap_check(k, sd, rho_list=(7.0,), t=9.0)["ratio"][7.0] == pytest.approx(res["ratio"][7.0], rel=1e-12)


def test_ray_directions_unit():
    for d in (1, 2, 3):
        dirs = ray_directions(d)
        assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0)
    assert len(ray_directions(2)) == 5


def test_report_csv_roundtrip(central_1d, tmp_path):
    path = tmp_path / "c.csv"
    central_1d.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("x1,t,p,reference,ratio")
    assert len(lines) == len(central_1d.rows) + 1
    first = lines[1].split(",")
    assert math.isclose(float(first[4]), central_1d.rows[0]["ratio"], rel_tol=0, abs_tol=0)
