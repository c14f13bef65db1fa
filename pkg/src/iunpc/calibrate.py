"""Boundary calibration of the partial level ``alpha_c``.

The global test rejects when ``T_G = max(lambda_lower, lambda_upper) <= alpha_c``.
Size ``alpha`` at an equivalence boundary therefore makes ``alpha_c`` the
``alpha``-quantile of the boundary distribution of ``T_G``. It is estimated
in a single simulation pass as the ``ceil(alpha * MC)``-th smallest simulated
value, with no fixed-point iteration.

The working model is normal. Group a is ``N(0, sigma)`` and group b is
``N(delta_b, sigma)``, with ``delta_b = -eps_lower`` at the lower boundary and
``+eps_upper`` at the upper. Only the standardized boundary ``eps / sigma``
affects the result.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import _rng
from ._validation import check_alpha, check_margins, check_positive_int, check_sigma
from .perm_engine import batch_partial_pvalues
from .transform import MarginPair, TransformKind, TwoSampleData, apply_transform

MIN_QUANTILE_RANK = 10
_CHUNK = 1024


@dataclass(frozen=True)
class CalibrationSpec:
    n1: int
    n2: int
    margins: MarginPair
    alpha: float = 0.05
    sigma: float = 1.0
    mc_replicates: int = 5000
    permutations_per_replicate: int = 2500
    seed: int = _rng.DEFAULT_SEED
    transform: TransformKind = TransformKind.IDENTITY
    boundaries: str = "auto"

    def __post_init__(self):
        check_positive_int(self.n1, "n1", minimum=2)
        check_positive_int(self.n2, "n2", minimum=2)
        object.__setattr__(self, "margins", check_margins(self.margins))
        check_alpha(self.alpha)
        check_sigma(self.sigma)
        check_positive_int(self.mc_replicates, "mc_replicates")
        check_positive_int(self.permutations_per_replicate, "permutations_per_replicate")
        object.__setattr__(self, "transform", TransformKind(self.transform))
        if self.boundaries not in ("auto", "both", "lower", "upper"):
            raise ValueError(f"boundaries must be auto/both/lower/upper, got {self.boundaries!r}")

    def to_dict(self):
        return {
            "n1": self.n1,
            "n2": self.n2,
            "eps_lower": self.margins.eps_lower,
            "eps_upper": self.margins.eps_upper,
            "alpha": self.alpha,
            "sigma": self.sigma,
            "mc_replicates": self.mc_replicates,
            "permutations_per_replicate": self.permutations_per_replicate,
            "seed": int(self.seed),
            "transform": self.transform.value,
            "boundaries": self.boundaries,
        }


@dataclass(frozen=True)
class CalibrationResult:
    alpha_c: float
    boundary_used: str
    quantile_mc_error: float
    spec: CalibrationSpec
    boundary_quantiles: dict
    clamped: bool = False
    low_count_warning: bool = False

    def to_dict(self):
        return {
            "alpha_c": self.alpha_c,
            "boundary_used": self.boundary_used,
            "quantile_mc_error": self.quantile_mc_error,
            "boundary_quantiles": dict(self.boundary_quantiles),
            "clamped": self.clamped,
            "low_count_warning": self.low_count_warning,
            "spec": self.spec.to_dict(),
        }


def pooled_sigma(data):
    """Pooled within-group standard deviation (unbiased group variances)."""
    n1, n2 = data.n1, data.n2
    if n1 + n2 < 3:
        raise ValueError("pooled sigma needs at least 3 observations")
    v1 = np.var(data.sample_a, ddof=1)
    v2 = np.var(data.sample_b, ddof=1)
    sigma = math.sqrt(((n1 - 1) * v1 + (n2 - 1) * v2) / (n1 + n2 - 2))
    if sigma == 0.0:
        raise ValueError("pooled variance is zero; calibration is undefined for constant data")
    return sigma


_BOUNDARY_STREAMS = {
    "upper": (_rng.STREAM_BOUNDARY_DATA, _rng.STREAM_BOUNDARY_PERM),
    "lower": (_rng.STREAM_LOWER_BOUNDARY_DATA, _rng.STREAM_LOWER_BOUNDARY_PERM),
}


def _boundary_delta(margins, boundary):
    return -margins.eps_lower if boundary == "lower" else margins.eps_upper


def _replicate_data(n1, n2, delta, sigma, seed, stream, start, count):
    keys = _rng.replicate_keys(seed, stream, start, count)
    y = np.empty((count, n1 + n2))
    for i, key in enumerate(keys):
        y[i] = _rng.data_generator(key).standard_normal(n1 + n2)
    y *= sigma
    y[:, n1:] += delta
    return y


def simulate_partial_pvalues(
    n1, n2, margins, delta, sigma, mc_replicates, n_permutations, seed,
    transform=TransformKind.IDENTITY, data_stream=_rng.STREAM_BOUNDARY_DATA,
    perm_stream=_rng.STREAM_BOUNDARY_PERM,
):
    """Simulated ``(lambda_lower, lambda_upper)`` over ``mc_replicates`` normal datasets.

    Replicate ``r`` uses data stream key ``(seed, data_stream, r)`` and
    permutation stream key ``(seed, perm_stream, r)``, so results do not
    depend on chunking or on the number of threads.
    """
    transform = TransformKind(transform)
    lam_l = np.empty(mc_replicates)
    lam_u = np.empty(mc_replicates)
    for start in range(0, mc_replicates, _CHUNK):
        count = min(_CHUNK, mc_replicates - start)
        y = _replicate_data(n1, n2, delta, sigma, seed, data_stream, start, count)
        xl = y.copy()
        xu = y
        if margins.lower_active:
            xl[:, n1:] += margins.eps_lower
        if margins.upper_active:
            xu[:, n1:] -= margins.eps_upper
        if transform is not TransformKind.IDENTITY:
            xl = apply_transform(xl, transform)
            xu = apply_transform(xu, transform)
        keys = _rng.replicate_keys(seed, perm_stream, start, count)
        lam_l[start:start + count], lam_u[start:start + count] = batch_partial_pvalues(
            xl, xu, n1, n_permutations, keys
        )
    if not margins.lower_active:
        lam_l[:] = 0.0
    if not margins.upper_active:
        lam_u[:] = 0.0
    return lam_l, lam_u


def simulate_global_statistic(*args, **kwargs):
    """Simulated ``T_G = max(lambda_lower, lambda_upper)``; arguments as :func:`simulate_partial_pvalues`."""
    lam_l, lam_u = simulate_partial_pvalues(*args, **kwargs)
    return np.maximum(lam_l, lam_u)


def generate_boundary_dataset(spec, boundary, replicate=0):
    """Replicate ``replicate`` of the calibration data at ``boundary`` ('lower' or 'upper')."""
    if boundary not in ("lower", "upper"):
        raise ValueError(f"boundary must be 'lower' or 'upper', got {boundary!r}")
    y = _replicate_data(
        spec.n1, spec.n2, _boundary_delta(spec.margins, boundary), spec.sigma,
        spec.seed, _BOUNDARY_STREAMS[boundary][0], replicate, 1,
    )[0]
    return TwoSampleData(y[: spec.n1], y[spec.n1:])


def _quantile_rank(alpha, mc):
    # guard against alpha*mc landing a hair above an integer
    return max(1, math.ceil(alpha * mc - 1e-9))


def _boundaries_for(spec):
    m = spec.margins
    if spec.boundaries != "auto":
        wanted = ["lower", "upper"] if spec.boundaries == "both" else [spec.boundaries]
    elif not m.lower_active:
        wanted = ["upper"]
    elif not m.upper_active:
        wanted = ["lower"]
    elif m.eps_lower == m.eps_upper and spec.transform in (TransformKind.IDENTITY, TransformKind.MIDRANK):
        # reflecting the data maps one boundary onto the other exactly
        wanted = ["upper"]
    else:
        wanted = ["lower", "upper"]
    for b in wanted:
        if b == "lower" and not m.lower_active or b == "upper" and not m.upper_active:
            raise ValueError(f"boundary {b!r} is inactive under margins {m}")
    return wanted


def calibrate_alpha(spec):
    """Calibrated partial level for ``spec``.

    Returns the smallest boundary quantile over the boundaries simulated,
    clamped into ``[alpha, (1 + alpha) / 2)``.
    """
    if spec.margins.degenerate:
        raise ValueError("calibration needs at least one non-zero margin")
    alpha, mc = spec.alpha, spec.mc_replicates
    k = _quantile_rank(alpha, mc)
    low_count = k < MIN_QUANTILE_RANK
    if low_count:
        warnings.warn(
            f"only {k} replicates below the quantile; increase mc_replicates", RuntimeWarning, stacklevel=2
        )
    spread = math.sqrt(mc * alpha * (1 - alpha))
    lo_rank = max(1, math.floor(k - spread))
    hi_rank = min(mc, math.ceil(k + spread))

    quantiles, errors = {}, {}
    for boundary in _boundaries_for(spec):
        t_g = np.sort(
            simulate_global_statistic(
                spec.n1, spec.n2, spec.margins, _boundary_delta(spec.margins, boundary), spec.sigma,
                mc, spec.permutations_per_replicate, spec.seed, spec.transform,
                *_BOUNDARY_STREAMS[boundary],
            )
        )
        quantiles[boundary] = float(t_g[k - 1])
        errors[boundary] = float(t_g[hi_rank - 1] - t_g[lo_rank - 1]) / 2.0

    used = min(quantiles, key=quantiles.get)
    raw = quantiles[used]
    upper_limit = np.nextafter((1.0 + alpha) / 2.0, 0.0)
    alpha_c = float(min(max(raw, alpha), upper_limit))
    return CalibrationResult(
        alpha_c=alpha_c,
        boundary_used=used if len(quantiles) == 1 else "both",
        quantile_mc_error=errors[used],
        spec=spec,
        boundary_quantiles=quantiles,
        clamped=alpha_c != raw,
        low_count_warning=low_count,
    )


def auto_calibration_spec(data, margins, alpha, transform=TransformKind.IDENTITY, seed=_rng.DEFAULT_SEED, sigma=None, **kwargs):
    """CalibrationSpec for ``data``, using its pooled sigma unless ``sigma`` is given."""
    return CalibrationSpec(
        n1=data.n1,
        n2=data.n2,
        margins=check_margins(margins),
        alpha=alpha,
        sigma=pooled_sigma(data) if sigma is None else sigma,
        seed=seed,
        transform=transform,
        **kwargs,
    )
