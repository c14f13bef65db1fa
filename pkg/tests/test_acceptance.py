"""Acceptance gate: one test per criterion at its stated tolerance.

Each test records one PASS/FAIL line (printed in the terminal summary, or
on stdout when this file is run as a script) and then asserts every check.
"""

import functools
import json
import math
import sys

import numpy as np

from iunpc import cli, datasets
from iunpc._rng import DEFAULT_SEED, STREAM_SIZE_CHECK, STREAM_SIZE_CHECK_PERM
from iunpc.aux_tests import median_test_exact, sharp_permutation_test
from iunpc.calibrate import CalibrationSpec, calibrate_alpha, simulate_global_statistic
from iunpc.iu_test import PartialPValues, adaptive_stream, combine_max, run_iu_test
from iunpc.perm_engine import PermutationPlan, enumerate_splits, joint_distribution, pvalue
from iunpc.power_design import find_design, inverse_square_design, maximal_power
from iunpc.transform import MarginPair, TwoSampleData, shift_for_margins

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from elsewhere
    ACCEPTANCE_LINES = []

R_EXAMPLES = 100_000
TABLE2_MARGINS = (0.80, 0.40, 0.333, 0.20, 0.10, 0.02, 0.01, 0.001)


class Checks:
    def __init__(self, number, title):
        self.number, self.title, self.items = number, title, []

    def close(self, label, value, target, tol):
        self.items.append((f"{label}={value:.4g} (target {target}±{tol})", abs(value - target) <= tol))

    def at_most(self, label, value, bound):
        self.items.append((f"{label}={value:.4g} (<= {bound})", value <= bound))

    def true(self, label, ok):
        self.items.append((label, bool(ok)))

    def finish(self):
        failed = [label for label, ok in self.items if not ok]
        verdict = "PASS" if not failed else "FAIL"
        line = f"criterion {self.number} [{verdict}] {self.title}: {len(self.items) - len(failed)}/{len(self.items)} checks"
        if failed:
            line += "; failing: " + "; ".join(failed)
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert not failed, line


@functools.lru_cache(maxsize=None)
def _table2_calibration(eps):
    return calibrate_alpha(CalibrationSpec(12, 12, MarginPair(eps, eps), 0.05, 1.0, 10_000, 5000, DEFAULT_SEED))


@functools.lru_cache(maxsize=None)
def _plan():
    return PermutationPlan(R_EXAMPLES, seed=DEFAULT_SEED)


def _lambda_g(name, eps, transform="identity"):
    return run_iu_test(datasets.load(name), (eps, eps), transform=transform, plan=_plan(), alpha_c=0.05).t_global


def test_criterion_1_table2_calibration():
    c = Checks(1, "Table 2 calibration and maximal power (n=12, MC=10000, R=5000)")
    targets = {0.80: (0.060, 0.301), 0.40: (0.185, 0.076), 0.20: (0.337, 0.059), 0.02: (0.504, 0.051)}
    for eps, (a_c, w_cal) in targets.items():
        cal = _table2_calibration(eps)
        mp = maximal_power(12, 12, (eps, eps), 0.05, 1.0, 10_000, 5000, DEFAULT_SEED, alpha_c=cal.alpha_c)
        c.close(f"alpha_c[{eps}]", cal.alpha_c, a_c, 0.015)
        c.close(f"power_cal[{eps}]", mp.calibrated, w_cal, 0.02)
        if eps <= 0.40:
            c.at_most(f"power_naive[{eps}]", mp.naive, 0.005)
        else:
            c.close(f"power_naive[{eps}]", mp.naive, 0.235, 0.02)
    c.finish()


def test_criterion_2_table3_spot_cells():
    c = Checks(2, "Table 3 spot cells (MC=5000, R=2500)")
    m10 = MarginPair(1.0, 1.0)
    cal10 = calibrate_alpha(CalibrationSpec(10, 10, m10, 0.05, 1.0, 5000, 2500, DEFAULT_SEED))
    mp10 = maximal_power(10, 10, m10, 0.05, 1.0, 5000, 2500, DEFAULT_SEED, alpha_c=cal10.alpha_c)
    c.close("n=10,eps=1.0 naive", mp10.naive, 0.392, 0.03)
    c.close("n=10,eps=1.0 alpha_c", cal10.alpha_c, 0.054, 0.015)
    c.close("n=10,eps=1.0 calibrated", mp10.calibrated, 0.426, 0.03)
    mp20 = maximal_power(20, 20, (0.25, 0.25), 0.05, 1.0, 5000, 2500, DEFAULT_SEED)
    c.close("n=20,eps=0.25 calibrated", mp20.calibrated, 0.065, 0.02)
    c.at_most("n=20,eps=0.25 naive", mp20.naive, 0.005)
    c.finish()


def test_criterion_3_designs():
    c = Checks(3, "design table (p=0.80, alpha=0.05)")
    for eps, n, tol in ((1.0, 18, 2), (0.6, 49, 4)):
        res = find_design(0.8, (eps, eps), 0.05, 1.0, 5000, 2500, DEFAULT_SEED)
        c.close(f"n[{eps}]", res.n_per_group, n, tol)
    for eps, n in ((0.4, 109), (0.2, 435), (0.1, 1738)):
        got = inverse_square_design(eps, 17.38).n_per_group
        c.true(f"inverse_square({eps})={got} (exact {n})", got == n)
    c.finish()


def test_criterion_4_example1():
    c = Checks(4, "Example 1 sulfur (R=1e5)")
    d = datasets.load("sulfur")
    c.close("sharp two-sided", sharp_permutation_test(d, "two_sided", _plan()).pvalue, 0.2221, 0.008)
    for eps, ref in ((0.005, 0.727), (0.020, 0.103), (0.0239, 0.0421), (0.025, 0.031)):
        c.close(f"lambda_G[{eps}]", _lambda_g("sulfur", eps), ref, 0.01)
    for eps, ref in ((0.020, 0.113), (0.025, 0.045)):
        c.close(f"lambda_RG[{eps}]", _lambda_g("sulfur", eps, "midrank"), ref, 0.01)
    before = run_iu_test(d, (0.020, 0.020), plan=_plan(), alpha_c=0.05)
    after = run_iu_test(d, (0.0232, 0.0232), plan=_plan(), alpha_c=0.05)
    c.true(f"decision flip N-Eq at 0.020 ({before.decision.value}) -> Eq at 0.0232 ({after.decision.value})",
           not before.equivalent and after.equivalent)
    c.finish()


def test_criterion_5_example2():
    c = Checks(5, "Example 2 log Cmax (R=1e5)")
    d = datasets.load("log_cmax")
    c.close("sharp two-sided", sharp_permutation_test(d, "two_sided", _plan()).pvalue, 0.0535, 0.005)
    c.close("sharp one-sided", sharp_permutation_test(d, "greater", _plan()).pvalue, 0.0268, 0.004)
    c.close("median exact one-sided", median_test_exact(d, "greater").pvalue, 0.0581, 0.003)
    for eps, ref in ((0.071, 0.382), (0.109, 0.071), (0.120, 0.039)):
        c.close(f"lambda_G[{eps}]", _lambda_g("log_cmax", eps), ref, 0.012)
    for eps, ref in ((0.120, 0.063), (0.125, 0.039)):
        c.close(f"lambda_RG[{eps}]", _lambda_g("log_cmax", eps, "midrank"), ref, 0.012)
    c.finish()


def test_criterion_6_example3():
    c = Checks(6, "Example 3 job satisfaction (R=1e5)")
    d = datasets.load("job_satisfaction")
    c.close("sharp two-sided", sharp_permutation_test(d, "two_sided", _plan()).pvalue, 0.00086, 0.0006)
    for eps, ref in ((22, 0.136), (24, 0.062), (25, 0.035)):
        c.close(f"lambda_G[{eps}]", _lambda_g("job_satisfaction", eps), ref, 0.012)
    for eps, ref in ((24, 0.054), (25, 0.026)):
        c.close(f"lambda_RG[{eps}]", _lambda_g("job_satisfaction", eps, "midrank"), ref, 0.012)
    c.finish()


def _partials(joint):
    return PartialPValues(pvalue(joint.t_lower, joint.observed_lower), pvalue(joint.t_upper, joint.observed_upper))


def _cli_json(argv):
    import contextlib
    import io

    buf = io.StringIO()
    with contextlib.redirect_stdout(buf), contextlib.redirect_stderr(io.StringIO()):
        code = cli.main(argv)
    doc = json.loads(buf.getvalue())
    doc["manifest"].pop("created")
    return code, json.dumps(doc, sort_keys=True)


def test_criterion_7_properties():
    c = Checks(7, "exact property suite")
    rng = np.random.default_rng(2024)
    exhaustive = PermutationPlan(exhaustive=True)

    ok = True
    for i in range(50):
        n1, n2 = rng.integers(2, 15, size=2)
        d = TwoSampleData(rng.normal(size=n1), rng.normal(size=n2))
        joint = joint_distribution(shift_for_margins(d, MarginPair(0.0, 0.0)), PermutationPlan(1000, seed=i))
        ok &= bool(np.array_equal(joint.t_lower, -joint.t_upper))
    c.true("zero-margin antisymmetry on 50 datasets", ok)

    ok = True
    for _ in range(20):
        n1 = int(rng.integers(2, 6))
        n2 = int(rng.integers(2, 11 - n1))
        a, b = rng.uniform(0.5, 5, n1), rng.uniform(0.5, 5, n2)
        x = np.concatenate([a, b])
        joint = joint_distribution(shift_for_margins(TwoSampleData(a, b), MarginPair(0.0, 0.0)), exhaustive)
        splits = enumerate_splits(x.size, n1)
        mask = np.zeros((splits.shape[0], x.size), bool)
        np.put_along_axis(mask, splits, True, axis=1)
        ratio = np.array([x[m].mean() / x[~m].mean() for m in mask])
        ok &= pvalue(joint.t_upper, joint.observed_upper) == pvalue(ratio, ratio[0])
    c.true("ratio/difference p-value equality (exhaustive, n <= 10)", ok)

    from scipy import stats

    inside = True
    for _ in range(10):
        n1, n2 = rng.integers(3, 8, size=2)
        d = TwoSampleData(rng.normal(size=n1), rng.normal(0.3, 1, n2))
        pair = shift_for_margins(d, MarginPair(*rng.uniform(0, 1, 2)))
        ex = _partials(joint_distribution(pair, exhaustive))
        mc = _partials(joint_distribution(pair, PermutationPlan(R_EXAMPLES, seed=DEFAULT_SEED)))
        for exact, est in ((ex.lambda_lower, mc.lambda_lower), (ex.lambda_upper, mc.lambda_upper)):
            lo, hi = stats.binom.interval(0.99, R_EXAMPLES, exact)
            inside &= lo / R_EXAMPLES <= est <= hi / R_EXAMPLES
    c.true("MC vs exhaustive within binomial 99% bounds (10 instances, R=1e5)", inside)

    values = [_table2_calibration(eps).alpha_c for eps in TABLE2_MARGINS]
    c.true(f"alpha_c in [0.05, 0.525) on Table 2 sweep {[round(v, 4) for v in values]}",
           all(0.05 <= v < 0.525 for v in values))

    mismatches, total = [], 200
    for _ in range(total):
        n1, n2 = rng.integers(2, 7, size=2)
        d = TwoSampleData(rng.normal(size=n1), rng.normal(size=n2))
        eps = rng.uniform(0.0, 2.0, size=2)
        joint = joint_distribution(shift_for_margins(d, MarginPair(*eps)), exhaustive)
        stream_p, max_p = adaptive_stream(joint).pvalue, combine_max(_partials(joint))
        if stream_p != max_p:
            mismatches.append((int(n1), int(n2), round(float(eps[0]), 4), round(float(eps[1]), 4),
                               round(stream_p, 4), round(max_p, 4)))
    label = f"adaptive-stream p == max(lambda_I, lambda_S) on {total} exhaustive instances"
    if mismatches:
        label += f" ({len(mismatches)} mismatches, first (n1,n2,eps_I,eps_S,stream,max)={mismatches[0]})"
    c.true(label, not mismatches)

    argv = ["iutest", "--builtin", "log_cmax", "--eps-lower", "0.1", "--eps-upper", "0.1",
            "--calibrate", "auto", "--mc", "300", "--mc-permutations", "200", "--permutations", "5000",
            "--seed", "5"]
    first, second = _cli_json(argv), _cli_json(argv)
    c.true("identical seeds -> identical JSON", first[0] == 0 and first == second)
    c.finish()


def test_criterion_8_consistency():
    c = Checks(8, "consistency and boundary size (eps=0.5, sigma=1, MC=5000, R=2500)")
    powers = {}
    for n in (10, 20, 40, 100):
        mp = maximal_power(n, n, (0.5, 0.5), 0.05, 1.0, 5000, 2500, DEFAULT_SEED)
        powers[n] = (mp.calibrated, mp.calibrated_se)
    for a, b in ((10, 20), (20, 40)):
        (pa, sa), (pb, sb) = powers[a], powers[b]
        c.true(f"power[{b}]={pb:.4f} >= power[{a}]={pa:.4f} - 2 SE", pb >= pa - 2 * math.hypot(sa, sb))
    c.true(f"power[100]={powers[100][0]:.4f} > 0.9", powers[100][0] > 0.9)

    spec = CalibrationSpec(12, 12, MarginPair(0.5, 0.5), 0.05, 1.0, 5000, 2500, DEFAULT_SEED)
    alpha_c = calibrate_alpha(spec).alpha_c
    t_g = simulate_global_statistic(12, 12, spec.margins, 0.5, 1.0, 5000, 2500, DEFAULT_SEED,
                                    data_stream=STREAM_SIZE_CHECK, perm_stream=STREAM_SIZE_CHECK_PERM)
    size = float(np.mean(t_g <= alpha_c))
    c.close("boundary size (fresh stream, n=12)", size, 0.05, 3 * math.sqrt(0.05 * 0.95 / 5000))
    c.finish()


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
