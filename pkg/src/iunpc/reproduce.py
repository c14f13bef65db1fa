"""Side-by-side reproduction of the published tables and worked examples.

Each target yields rows of (cell, quantity, published value, reproduced
value, tolerance, verdict). ``fast`` runs shrink the simulation sizes. Their
tolerances are widened and flagged, so they are smoke checks only.
"""

import csv
import io
from dataclasses import dataclass, field

from . import datasets
from ._rng import DEFAULT_SEED
from .aux_tests import median_test_exact, sharp_permutation_test
from .calibrate import CalibrationSpec, calibrate_alpha, pooled_sigma
from .iu_test import run_iu_test
from .perm_engine import PermutationPlan
from .power_design import find_design, inverse_square_design, maximal_power
from .transform import MarginPair

TARGETS = ("table2", "table3", "designs", "example1", "example2", "example3")

# eps: (alpha_c, calibrated power, naive power); n1 = n2 = 12, MC = 10000, R = 5000
TABLE2 = {
    0.80: (0.060, 0.301, 0.235),
    0.40: (0.185, 0.076, 0.001),
    0.333: (0.225, 0.066, 0.000),
    0.20: (0.337, 0.059, 0.000),
    0.10: (0.428, 0.052, 0.000),
    0.02: (0.504, 0.051, 0.000),
    0.01: (0.513, 0.0505, 0.000),
    0.001: (0.523, 0.0502, 0.000),
}

# n: {eps: (naive power, alpha_c, calibrated power)}; MC = 5000, R = 2500
TABLE3 = {
    10: {1.0: (0.392, 0.054, 0.426), 0.75: (0.085, 0.078, 0.190), 0.50: (0.001, 0.154, 0.091),
         0.25: (0.000, 0.310, 0.054), 0.10: (0.000, 0.434, 0.050)},
    15: {1.0: (0.704, 0.050, 0.704), 0.75: (0.040, 0.059, 0.348), 0.50: (0.008, 0.113, 0.123),
         0.25: (0.000, 0.271, 0.061), 0.10: (0.000, 0.417, 0.053)},
    20: {1.0: (0.846, 0.050, 0.846), 0.75: (0.513, 0.052, 0.527), 0.50: (0.032, 0.084, 0.163),
         0.25: (0.000, 0.237, 0.065), 0.10: (0.000, 0.402, 0.056)},
}

# per-group n reaching power 0.8; small margins come from the inverse-square rule
DESIGNS_SIMULATED = {1.00: 18, 0.80: 28, 0.60: 49}
DESIGNS_RULE = {0.40: 109, 0.20: 435, 0.10: 1738}

# dataset: (two-sided sharp lambda, {eps: (alpha_c, lambda_G, lambda_RG, eq_X, eq_MR)})
EXAMPLES = {
    "example1": ("sulfur", 0.2221, {
        0.005: (0.301, 0.727, 0.698, False, False),
        0.010: (0.126, 0.491, 0.461, False, False),
        0.020: (0.052, 0.103, 0.113, False, False),
        0.0232: (0.050, 0.0494, 0.055, True, False),
        0.0239: (0.050, 0.0421, 0.050, True, True),
        0.025: (0.050, 0.031, 0.045, True, True),
    }),
    "example2": ("log_cmax", 0.0535, {
        0.022: (0.264, 0.902, 0.960, False, False),
        0.058: (0.068, 0.545, 0.720, False, False),
        0.071: (0.050, 0.382, 0.600, False, False),
        0.109: (0.050, 0.071, 0.154, False, False),
        0.120: (0.050, 0.039, 0.063, True, False),
        0.125: (0.050, 0.025, 0.039, True, True),
    }),
    "example3": ("job_satisfaction", 0.00086, {
        22: (0.05, 0.136, 0.164, False, False),
        24: (0.05, 0.062, 0.054, False, False),
        25: (0.05, 0.035, 0.026, True, True),
    }),
}
EXAMPLE2_ONE_SIDED = 0.0268
EXAMPLE2_MEDIAN = 0.0581
_LAMBDA_TOL = {"example1": 0.01, "example2": 0.012, "example3": 0.012}
_SHARP_TOL = {"example1": 0.008, "example2": 0.005, "example3": 0.0006}


@dataclass
class Row:
    cell: str
    quantity: str
    paper: object
    reproduced: object
    tolerance: str
    ok: bool

    @property
    def verdict(self):
        return "pass" if self.ok else "FAIL"


@dataclass
class Report:
    target: str
    fast: bool
    seed: int
    settings: dict
    rows: list = field(default_factory=list)

    @property
    def widened(self):
        return self.fast

    @property
    def all_pass(self):
        return all(r.ok for r in self.rows)

    def add_close(self, cell, quantity, paper, value, tol):
        tol = tol * (self.settings.get("tol_factor", 1.0))
        self.rows.append(Row(cell, quantity, paper, round(value, 6), f"±{tol:g}", abs(value - paper) <= tol))

    def add_at_most(self, cell, quantity, paper, value, bound):
        bound = bound * (self.settings.get("tol_factor", 1.0))
        self.rows.append(Row(cell, quantity, paper, round(value, 6), f"<={bound:g}", value <= bound))

    def add_exact(self, cell, quantity, paper, value):
        self.rows.append(Row(cell, quantity, paper, value, "exact", paper == value))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["target", "cell", "quantity", "paper", "reproduced", "tolerance", "verdict"])
        for r in self.rows:
            w.writerow([self.target, r.cell, r.quantity, r.paper, r.reproduced, r.tolerance, r.verdict])
        return buf.getvalue()

    def to_markdown(self):
        head = f"# reproduce {self.target}\n\n"
        if self.fast:
            head += "**fast mode: reduced simulation sizes, widened tolerances (smoke run only)**\n\n"
        head += "settings: " + ", ".join(f"{k}={v}" for k, v in self.settings.items()) + f", seed={self.seed}\n\n"
        lines = ["| cell | quantity | paper | reproduced | tolerance | verdict |", "|---|---|---|---|---|---|"]
        for r in self.rows:
            lines.append(f"| {r.cell} | {r.quantity} | {r.paper} | {r.reproduced} | {r.tolerance} | {r.verdict} |")
        n_pass = sum(r.ok for r in self.rows)
        return head + "\n".join(lines) + f"\n\n{n_pass}/{len(self.rows)} cells within tolerance\n"


def _sizes(fast, mc, r):
    if fast:
        return {"mc": 400, "R": 200, "tol_factor": 4.0}
    return {"mc": mc, "R": r, "tol_factor": 1.0}


def _table2(rep):
    mc, R = rep.settings["mc"], rep.settings["R"]
    for eps, (a_c, w_cal, w_naive) in TABLE2.items():
        cell = f"eps={eps}"
        cal = calibrate_alpha(CalibrationSpec(12, 12, MarginPair(eps, eps), 0.05, 1.0, mc, R, rep.seed))
        mp = maximal_power(12, 12, (eps, eps), 0.05, 1.0, mc, R, rep.seed, alpha_c=cal.alpha_c)
        rep.add_close(cell, "alpha_c", a_c, cal.alpha_c, 0.015)
        rep.add_close(cell, "power_calibrated", w_cal, mp.calibrated, 0.02)
        if w_naive <= 0.001:
            rep.add_at_most(cell, "power_naive", w_naive, mp.naive, 0.005)
        else:
            rep.add_close(cell, "power_naive", w_naive, mp.naive, 0.02)


def _table3(rep):
    mc, R = rep.settings["mc"], rep.settings["R"]
    for n, rows in TABLE3.items():
        for eps, (w_naive, a_c, w_cal) in rows.items():
            cell = f"n={n},eps={eps}"
            cal = calibrate_alpha(CalibrationSpec(n, n, MarginPair(eps, eps), 0.05, 1.0, mc, R, rep.seed))
            mp = maximal_power(n, n, (eps, eps), 0.05, 1.0, mc, R, rep.seed, alpha_c=cal.alpha_c)
            if w_naive <= 0.001:
                rep.add_at_most(cell, "power_naive", w_naive, mp.naive, 0.005)
            else:
                rep.add_close(cell, "power_naive", w_naive, mp.naive, 0.03)
            rep.add_close(cell, "alpha_c", a_c, cal.alpha_c, 0.015)
            rep.add_close(cell, "power_calibrated", w_cal, mp.calibrated, 0.03)


def _designs(rep):
    mc, R = rep.settings["mc"], rep.settings["R"]
    for eps, n in DESIGNS_SIMULATED.items():
        res = find_design(0.8, (eps, eps), 0.05, 1.0, mc, R, rep.seed)
        tol = max(2, round(0.08 * n))
        rep.add_close(f"eps={eps}", "n_per_group (simulation)", n, res.n_per_group, tol)
    for eps, n in DESIGNS_RULE.items():
        rep.add_exact(f"eps={eps}", "n_per_group (inverse-square rule)", n, inverse_square_design(eps).n_per_group)


def _example(rep):
    name, sharp_ref, rows = EXAMPLES[rep.target]
    data = datasets.load(name)
    plan = PermutationPlan(rep.settings["R"], seed=rep.seed)
    tol = _LAMBDA_TOL[rep.target]
    sharp = sharp_permutation_test(data, "two_sided", plan)
    rep.add_close("sharp", "lambda two-sided", sharp_ref, sharp.pvalue, _SHARP_TOL[rep.target])
    if rep.target == "example2":
        one = sharp_permutation_test(data, "greater", plan)
        rep.add_close("sharp", "lambda one-sided", EXAMPLE2_ONE_SIDED, one.pvalue, 0.004)
        med = median_test_exact(data, "greater")
        rep.add_close("median test", "exact p one-sided", EXAMPLE2_MEDIAN, med.pvalue, 0.003)
    sigma = pooled_sigma(data)
    for eps, (a_c, lam, lam_r, eq_x, eq_r) in rows.items():
        cell = f"eps={eps}"
        spec = CalibrationSpec(data.n1, data.n2, MarginPair(eps, eps), 0.05, sigma,
                               rep.settings["cal_mc"], rep.settings["cal_R"], rep.seed)
        rep.add_close(cell, "alpha_c", a_c, calibrate_alpha(spec).alpha_c, 0.015)
        res = run_iu_test(data, (eps, eps), plan=plan, alpha_c=a_c)
        res_r = run_iu_test(data, (eps, eps), transform="midrank", plan=plan, alpha_c=a_c)
        rep.add_close(cell, "lambda_G", lam, res.t_global, tol)
        rep.add_close(cell, "lambda_RG", lam_r, res_r.t_global, tol)
        rep.add_exact(cell, "decision X at published alpha_c", _label(eq_x), _label(res.equivalent))
        rep.add_exact(cell, "decision MR at published alpha_c", _label(eq_r), _label(res_r.equivalent))


def _label(eq):
    return "Eq" if eq else "N-Eq"


def reproduce(target, fast=False, seed=DEFAULT_SEED):
    """Run one reproduction target and return its :class:`Report`."""
    if target not in TARGETS:
        raise ValueError(f"unknown target {target!r}; choose from {', '.join(TARGETS)}")
    if target == "table2":
        settings = _sizes(fast, 10000, 5000)
    elif target in ("table3", "designs"):
        settings = _sizes(fast, 5000, 2500)
    else:
        settings = {"R": 10_000 if fast else 100_000, "cal_mc": 400 if fast else 5000,
                    "cal_R": 200 if fast else 2500, "tol_factor": 4.0 if fast else 1.0}
    rep = Report(target, fast, seed, settings)
    {"table2": _table2, "table3": _table3, "designs": _designs}.get(target, _example)(rep)
    return rep
