import math

import numpy as np
import pytest

from iunpc.calibrate import CalibrationSpec, calibrate_alpha
from iunpc.power_design import (
    INVERSE_SQUARE_N1,
    DesignError,
    PowerQuery,
    estimate_power,
    find_design,
    inverse_square_design,
    maximal_power,
    maximal_power_point,
    power_curve,
)
from iunpc.transform import MarginPair

MC, R = 1500, 800


def test_maximal_power_point():
    assert maximal_power_point(MarginPair(0.5, 0.5)) == 0.0
    assert maximal_power_point(MarginPair(0.2, 0.6)) == pytest.approx(0.2)


@pytest.mark.parametrize("eps, n", [(0.4, 109), (0.2, 435), (0.1, 1738), (1.0, 18)])
def test_inverse_square_rule(eps, n):
    res = inverse_square_design(eps, INVERSE_SQUARE_N1)
    assert res.n_per_group == n and res.method == "inverse_square_rule"
    assert res.achieved_power is None


def test_inverse_square_rejects_bad_input():
    with pytest.raises(ValueError):
        inverse_square_design(0.0)


def test_naive_collapse_small_margin():
    mp = maximal_power(12, 12, (0.2, 0.2), mc_replicates=MC, permutations_per_replicate=R)
    assert mp.naive <= 0.005
    assert mp.calibrated >= mp.naive - 2 * math.hypot(mp.calibrated_se, mp.naive_se)


def test_estimate_power_modes_share_simulation():
    q = PowerQuery(0.0, 10, 10, MarginPair(0.8, 0.8), mode="naive", mc_replicates=MC, permutations_per_replicate=R)
    naive = estimate_power(q)
    fixed = estimate_power(PowerQuery(0.0, 10, 10, MarginPair(0.8, 0.8), mode=0.05, mc_replicates=MC,
                                      permutations_per_replicate=R))
    assert naive.rejection_rate == fixed.rejection_rate
    assert naive.mc_standard_error == pytest.approx(math.sqrt(naive.rejection_rate * (1 - naive.rejection_rate) / MC))


def test_maximal_power_matches_estimate_power():
    m = MarginPair(0.8, 0.8)
    cal = calibrate_alpha(CalibrationSpec(10, 10, m, mc_replicates=MC, permutations_per_replicate=R))
    mp = maximal_power(10, 10, m, mc_replicates=MC, permutations_per_replicate=R, alpha_c=cal.alpha_c)
    est = estimate_power(PowerQuery(0.0, 10, 10, m, mode="auto_calibrate", mc_replicates=MC,
                                    permutations_per_replicate=R))
    assert est.alpha_c == cal.alpha_c
    assert est.rejection_rate == mp.calibrated


def test_power_curve_peaks_inside_and_calibrates_once():
    q = PowerQuery(0.0, 12, 12, MarginPair(1.0, 1.0), mode="auto_calibrate", mc_replicates=MC,
                   permutations_per_replicate=R)
    curve = power_curve(q, [-1.5, -0.5, 0.0, 0.5, 1.5])
    rates = [e.rejection_rate for e in curve]
    assert len({e.alpha_c for e in curve}) == 1
    assert rates[2] >= max(rates[0], rates[4])
    assert rates[0] < 0.05 and rates[4] < 0.05


def test_power_at_boundary_near_alpha():
    m = MarginPair(0.6, 0.6)
    est = estimate_power(PowerQuery(0.6, 12, 12, m, mode="auto_calibrate", mc_replicates=3000,
                                    permutations_per_replicate=R))
    # the boundary simulation stream differs from the power stream, so this is a fresh check
    assert abs(est.rejection_rate - 0.05) <= 3 * math.sqrt(0.05 * 0.95 / 3000)


def test_find_design_small_target():
    res = find_design(0.5, (1.0, 1.0), mc_replicates=1000, permutations_per_replicate=500)
    assert res.method == "simulation_search"
    assert res.achieved_power >= 0.5
    below = [p for n, p in res.evaluations.items() if n < res.n_per_group]
    assert all(p < 0.5 for p in below)


def test_find_design_target_alpha_huge_margins():
    # every boundary and centre statistic sits near 1/6 at n=2, and the
    # boundary quantile as threshold admits at least alpha of the centre mass
    res = find_design(0.05, (10.0, 10.0), mc_replicates=600, permutations_per_replicate=200)
    assert res.n_per_group == 2


def test_find_design_cap():
    with pytest.raises(DesignError) as info:
        find_design(0.9, (0.3, 0.3), mc_replicates=200, permutations_per_replicate=100, max_n=8)
    assert info.value.bracket[0] == 8


def test_find_design_validates_target():
    with pytest.raises(ValueError):
        find_design(1.2, (1.0, 1.0))


def test_power_query_to_dict_roundtrip_fields():
    q = PowerQuery(0.1, 10, 12, MarginPair(0.5, math.inf), mode=0.1)
    d = q.to_dict()
    assert d["eps_upper"] == math.inf and d["mode"] == 0.1 and d["n2"] == 12
    assert np.isfinite(d["eps_lower"])
