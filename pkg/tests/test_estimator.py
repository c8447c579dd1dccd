import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from subspace_sketch.conclab import ExperimentConfig
from subspace_sketch.conclab.stats import ConcentrationReport, make_cell, try_fit
from subspace_sketch.errors import (
    CalibrationMismatchError,
    RejectedInputError,
    UnreliableCalibrationError,
)
from subspace_sketch.estimator import (
    CalibrationResult,
    calibrate_constants,
    estimate_pair,
    explain_plan,
    plan_sketch_dimension,
    projected_affinity_estimate,
    projected_distance_estimate,
    rip_band,
)


def test_affinity_estimate_examples():
    assert projected_affinity_estimate(3.0, 3, 5, 40) == 3.0
    assert projected_affinity_estimate(0.0, 1, 5, 50) == pytest.approx(0.1)
    assert projected_affinity_estimate(0.25, 1, 5, 100) == pytest.approx(0.2875)


def test_affinity_estimate_rejections():
    with pytest.raises(RejectedInputError):
        projected_affinity_estimate(1.5, 1, 5, 100)
    with pytest.raises(RejectedInputError):
        projected_affinity_estimate(0.5, 1, 5, 5)
    with pytest.raises(RejectedInputError):
        projected_affinity_estimate(0.5, 3, 2, 10)


def test_distance_estimate_examples():
    assert projected_distance_estimate(1.0, 2, 4, 50) == 1.0
    assert projected_distance_estimate(2.5, 4, 4, 40) == pytest.approx(2.5 * (1 - 4 / 40))
    assert projected_distance_estimate(3.0, 2, 4, 100) == pytest.approx(2.92)
    with pytest.raises(RejectedInputError):
        projected_distance_estimate(0.5, 2, 4, 100)


@settings(max_examples=200, deadline=None)
@given(
    d1=st.integers(1, 8),
    extra=st.integers(0, 8),
    frac=st.floats(0.0, 1.0),
    n_over=st.integers(1, 500),
)
def test_estimate_consistency(d1, extra, frac, n_over):
    d2 = d1 + extra
    n = d2 + n_over
    aff = frac * d1
    est = estimate_pair(aff, d1, d2, n, 0.3)
    d_x = (d1 + d2) / 2 - aff
    assert est.od_sq == pytest.approx((d1 + d2) / 2 - est.oaff_sq, abs=1e-12)
    assert est.od_sq == pytest.approx(projected_distance_estimate(d_x, d1, d2, n), abs=1e-12)
    assert aff - 1e-12 <= est.oaff_sq <= d1 + 1e-12
    assert (d2 - d1) / 2 - 1e-12 <= est.od_sq <= d_x + 1e-12
    assert est.slack == pytest.approx(0.3 * (d1 - aff), abs=1e-12)


def test_rip_band_examples():
    assert rip_band(0.0, 0.2) == (0.0, 0.0)
    lo, hi = rip_band(2.0, 0.1)
    assert lo == pytest.approx(1.8) and hi == pytest.approx(2.2)
    with pytest.raises(RejectedInputError):
        rip_band(1.0, 1.0)


@settings(max_examples=300, deadline=None)
@given(
    d1=st.integers(1, 10),
    extra=st.integers(0, 10),
    frac=st.floats(0.0, 1.0),
    eps=st.floats(0.01, 0.99),
)
def test_band_contains_estimate_when_bias_small(d1, extra, frac, eps):
    d2 = d1 + extra
    n = math.ceil(d2 / eps)
    assume(n > d2)
    floor = (d2 - d1) / 2
    d_sq = floor + frac * d1
    assume(d_sq > 0)
    lo, hi = rip_band(d_sq, eps)
    est = projected_distance_estimate(d_sq, d1, d2, n)
    assert lo - 1e-12 <= est <= hi + 1e-12


def cal(c1=2.0, c2=0.05, eps=0.3, r2=0.99, reliable=True):
    return CalibrationResult(c1_hat=c1, c2_hat=c2, epsilon=eps, fit_r2=r2, reliable=reliable)


def test_plan_single_pair():
    assert explain_plan(4, 1, 0.3, 0.5, cal()) == (8, "dimension")
    assert plan_sketch_dimension(5, 1, 0.3, 0.5, cal(c1=2.5)) == math.ceil(2.5 * 5)


def test_plan_union_bound_minimal():
    c = cal(c1=1.0, c2=0.05)
    n, binding = explain_plan(4, 10, 0.3, 1e-3, c)
    assert binding == "union-bound"
    pairs = 45
    assert math.exp(-0.05 * n) * pairs <= 1e-3
    assert math.exp(-0.05 * (n - 1)) * pairs > 1e-3


def test_plan_log_growth_in_l():
    c = cal(c1=2.0, c2=0.05)
    small = plan_sketch_dimension(4, 10, 0.3, 1e-3, c)
    big = plan_sketch_dimension(4, 100, 0.3, 1e-3, c)
    assert 0 < big - small <= math.ceil(math.log(99 * 100 / (9 * 10)) / 0.05) + 1
    assert (big - small) / big < 0.5


@settings(max_examples=100, deadline=None)
@given(
    t1=st.floats(1e-9, 0.9),
    t2=st.floats(1e-9, 0.9),
    l_count=st.integers(1, 1000),
    d=st.integers(1, 20),
)
def test_plan_monotone_in_target(t1, t2, l_count, d):
    lo, hi = sorted((t1, t2))
    c = cal(c1=1.7, c2=0.03)
    assert plan_sketch_dimension(d, l_count, 0.3, hi, c) <= plan_sketch_dimension(d, l_count, 0.3, lo, c)


def test_plan_refusals():
    with pytest.raises(CalibrationMismatchError):
        plan_sketch_dimension(4, 2, 0.2, 1e-3, cal(eps=0.3))
    with pytest.raises(UnreliableCalibrationError):
        plan_sketch_dimension(4, 2, 0.3, 1e-3, cal(reliable=False))
    with pytest.raises(UnreliableCalibrationError):
        plan_sketch_dimension(4, 2, 0.3, 1e-3, cal(r2=0.5))


def _report(rates, grid, trials=10**6, d=4, eps=0.3):
    cfg = ExperimentConfig(ambient=1024, n_grid=grid, d1=d, d2=d, epsilon=eps, trials=trials)
    cells = tuple(make_cell(n, round(p * trials), trials) for n, p in zip(grid, rates))
    rep = ConcentrationReport(config=cfg, cells=cells)
    return ConcentrationReport(config=cfg, cells=cells, fit=try_fit(rep))


def test_calibrate_exact_exponential():
    grid = (20, 40, 60, 80)
    rep = _report([math.exp(-0.05 * n) for n in grid], grid, trials=10**9)
    c = calibrate_constants(rep)
    assert c.c2_hat == pytest.approx(0.05, rel=1e-6)
    assert c.fit_r2 == pytest.approx(1.0, abs=1e-9)
    assert c.reliable
    assert c.c1_hat == pytest.approx(20 / 4)


def test_calibrate_all_zero_failures():
    rep = _report([0, 0, 0, 0], (20, 40, 60, 80))
    c = calibrate_constants(rep)
    assert not c.reliable
    assert math.isnan(c.c2_hat) and math.isnan(c.c1_hat)
    with pytest.raises(UnreliableCalibrationError):
        plan_sketch_dimension(4, 2, 0.3, 1e-3, c)


def test_calibrate_increasing_rates_unreliable():
    rep = _report([0.01, 0.02, 0.04, 0.08], (20, 40, 60, 80))
    c = calibrate_constants(rep)
    assert c.c2_hat < 0 and not c.reliable


def test_calibration_round_trip():
    c = cal()
    assert CalibrationResult.from_dict(c.to_dict()) == c
    with pytest.raises(RejectedInputError):
        CalibrationResult.from_dict({"c1_hat": 1.0})
