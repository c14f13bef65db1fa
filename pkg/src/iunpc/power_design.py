"""Rejection probability of the IU test and sample-size design.

Power is the Monte Carlo proportion of normal datasets (group a ``N(0, sigma)``,
group b ``N(delta, sigma)``) on which the test declares equivalence. "Maximal
power" is evaluated at the centre of the equivalence interval,
``(eps_upper - eps_lower) / 2``, which is ``delta = 0`` for symmetric margins.
"""

import math
import numbers
from dataclasses import dataclass, field, replace

import numpy as np

from . import _rng
from ._validation import check_alpha, check_margins, check_positive_int, check_sigma
from .calibrate import CalibrationSpec, calibrate_alpha, simulate_global_statistic
from .transform import TransformKind

INVERSE_SQUARE_N1 = 17.38


class DesignError(RuntimeError):
    def __init__(self, message, bracket):
        super().__init__(message)
        self.bracket = bracket


@dataclass(frozen=True)
class PowerQuery:
    """One power evaluation.

    ``mode`` is ``'naive'``, ``'auto_calibrate'``, a fixed ``alpha_c`` level, or
    a :class:`CalibrationSpec` to calibrate with.
    """

    delta: float
    n1: int
    n2: int
    margins: object
    alpha: float = 0.05
    mode: object = "auto_calibrate"
    sigma: float = 1.0
    mc_replicates: int = 5000
    permutations_per_replicate: int = 2500
    seed: int = _rng.DEFAULT_SEED
    transform: TransformKind = TransformKind.IDENTITY

    def __post_init__(self):
        object.__setattr__(self, "margins", check_margins(self.margins))
        object.__setattr__(self, "transform", TransformKind(self.transform))
        check_positive_int(self.n1, "n1", minimum=2)
        check_positive_int(self.n2, "n2", minimum=2)
        check_alpha(self.alpha)
        check_sigma(self.sigma)
        check_positive_int(self.mc_replicates, "mc_replicates")
        check_positive_int(self.permutations_per_replicate, "permutations_per_replicate")

    def calibration_spec(self):
        if isinstance(self.mode, CalibrationSpec):
            return self.mode
        return CalibrationSpec(
            self.n1, self.n2, self.margins, self.alpha, self.sigma, self.mc_replicates,
            self.permutations_per_replicate, self.seed, self.transform,
        )

    def to_dict(self):
        mode = self.mode
        if isinstance(mode, CalibrationSpec):
            mode = {"calibrate": mode.to_dict()}
        return {
            "delta": self.delta,
            "n1": self.n1,
            "n2": self.n2,
            "eps_lower": self.margins.eps_lower,
            "eps_upper": self.margins.eps_upper,
            "alpha": self.alpha,
            "mode": mode,
            "sigma": self.sigma,
            "mc_replicates": self.mc_replicates,
            "permutations_per_replicate": self.permutations_per_replicate,
            "seed": int(self.seed),
            "transform": self.transform.value,
        }


@dataclass(frozen=True)
class PowerEstimate:
    rejection_rate: float
    mc_standard_error: float
    query: PowerQuery
    alpha_c: float
    calibration: object = None

    def to_dict(self):
        return {
            "rejection_rate": self.rejection_rate,
            "mc_standard_error": self.mc_standard_error,
            "alpha_c": self.alpha_c,
            "query": self.query.to_dict(),
            "calibration": self.calibration.to_dict() if self.calibration is not None else None,
        }


@dataclass(frozen=True)
class MaximalPower:
    """Calibrated and naive power from one shared simulation."""

    calibrated: float
    naive: float
    alpha_c: float
    mc_replicates: int
    calibration: object = None

    @property
    def calibrated_se(self):
        return _binomial_se(self.calibrated, self.mc_replicates)

    @property
    def naive_se(self):
        return _binomial_se(self.naive, self.mc_replicates)


@dataclass(frozen=True)
class DesignResult:
    n_per_group: int
    achieved_power: float
    method: str
    evaluations: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "n_per_group": self.n_per_group,
            "achieved_power": self.achieved_power,
            "method": self.method,
            "evaluations": {str(k): v for k, v in sorted(self.evaluations.items())},
        }


def _binomial_se(p, m):
    return math.sqrt(p * (1.0 - p) / m)


def maximal_power_point(margins):
    return (margins.eps_upper - margins.eps_lower) / 2.0


def _simulated_t_global(query):
    return simulate_global_statistic(
        query.n1, query.n2, query.margins, query.delta, query.sigma, query.mc_replicates,
        query.permutations_per_replicate, query.seed, query.transform,
        data_stream=_rng.STREAM_POWER_DATA, perm_stream=_rng.STREAM_POWER_PERM,
    )


def _resolve_mode(query):
    mode = query.mode
    if isinstance(mode, str):
        if mode == "naive":
            return query.alpha, None
        if mode in ("auto_calibrate", "calibrated", "auto"):
            cal = calibrate_alpha(query.calibration_spec())
            return cal.alpha_c, cal
        raise ValueError(f"unknown power mode {mode!r}")
    if isinstance(mode, CalibrationSpec):
        cal = calibrate_alpha(mode)
        return cal.alpha_c, cal
    if isinstance(mode, numbers.Real) and 0 < mode < 1:
        return float(mode), None
    raise ValueError(f"invalid power mode {mode!r}")


def estimate_power(query):
    """Proportion of simulated datasets on which equivalence is declared."""
    alpha_c, cal = _resolve_mode(query)
    t_g = _simulated_t_global(query)
    rate = float(np.mean(t_g <= alpha_c))
    return PowerEstimate(rate, _binomial_se(rate, query.mc_replicates), query, alpha_c, cal)


def power_curve(query, deltas):
    """Rejection profile over ``deltas``, calibrating (if requested) only once."""
    alpha_c, cal = _resolve_mode(query)
    fixed = replace(query, mode=alpha_c)
    out = []
    for d in deltas:
        est = estimate_power(replace(fixed, delta=float(d)))
        out.append(PowerEstimate(est.rejection_rate, est.mc_standard_error, replace(query, delta=float(d)), alpha_c, cal))
    return out


def maximal_power(n1, n2, margins, alpha=0.05, sigma=1.0, mc_replicates=5000,
                  permutations_per_replicate=2500, seed=_rng.DEFAULT_SEED, transform=TransformKind.IDENTITY,
                  alpha_c=None):
    """Calibrated and naive power at the interval centre, off one shared simulation.

    ``alpha_c`` skips calibration when given.
    """
    margins = check_margins(margins)
    query = PowerQuery(
        maximal_power_point(margins), n1, n2, margins, alpha, "naive", sigma,
        mc_replicates, permutations_per_replicate, seed, transform,
    )
    cal = None
    if alpha_c is None:
        cal = calibrate_alpha(query.calibration_spec())
        alpha_c = cal.alpha_c
    t_g = _simulated_t_global(query)
    return MaximalPower(
        float(np.mean(t_g <= alpha_c)), float(np.mean(t_g <= alpha)), float(alpha_c), mc_replicates, cal
    )


def find_design(target_power, margins, alpha=0.05, sigma=1.0, mc_replicates=5000,
                permutations_per_replicate=2500, seed=_rng.DEFAULT_SEED, max_n=10_000, min_n=2,
                transform=TransformKind.IDENTITY):
    """Smallest common group size whose calibrated maximal power reaches ``target_power``.

    A doubling bracket is followed by bisection. Every candidate ``n`` is
    calibrated afresh, since ``alpha_c`` depends on ``n``. All candidates share
    ``seed``, which keeps the simulated power curve close to monotone.
    """
    if not 0.0 < target_power < 1.0:
        raise ValueError(f"target_power must lie in (0, 1), got {target_power!r}")
    margins = check_margins(margins)
    evaluations = {}

    def power_at(n):
        if n not in evaluations:
            evaluations[n] = maximal_power(
                n, n, margins, alpha, sigma, mc_replicates, permutations_per_replicate, seed, transform
            ).calibrated
        return evaluations[n]

    lo, hi = None, min_n
    while power_at(hi) < target_power:
        lo = hi
        if hi >= max_n:
            raise DesignError(
                f"power {evaluations[hi]:.3f} < {target_power} at the cap n={max_n}", bracket=(lo, None)
            )
        hi = min(2 * hi, max_n)
    if lo is None:
        return DesignResult(hi, evaluations[hi], "simulation_search", evaluations)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if power_at(mid) >= target_power:
            hi = mid
        else:
            lo = mid
    return DesignResult(hi, evaluations[hi], "simulation_search", evaluations)


def inverse_square_design(eps, n_at_unit=INVERSE_SQUARE_N1):
    """Per-group size ``ceil(n_at_unit / eps**2)`` for standardized margin ``eps``."""
    if not eps > 0 or not n_at_unit > 0:
        raise ValueError("eps and n_at_unit must be positive")
    # round off representation noise such as 17.38 / 0.01 = 1737.9999999999998
    n = round(n_at_unit / eps**2, 9)
    return DesignResult(int(math.ceil(n)), None, "inverse_square_rule")
