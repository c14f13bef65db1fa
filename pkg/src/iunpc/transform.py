"""Margin shifting and measurement-scale transforms.

Margins are applied in raw observation units first; the scale transform is
applied afterwards, separately to each shifted pooled vector. Transforming the
raw data before shifting would put the margins on the transformed scale, which
is not what the margins mean.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.stats import rankdata


class TransformKind(str, Enum):
    IDENTITY = "identity"
    LOG = "log"
    SQRT = "sqrt"
    MIDRANK = "midrank"


class TransformDomainError(ValueError):
    """A log/sqrt transform met a value outside its domain."""

    def __init__(self, kind, index, value):
        self.kind = kind
        self.index = index
        self.value = value
        super().__init__(
            f"{kind.value} transform undefined at pooled index {index} (value {value!r})"
        )


@dataclass(frozen=True)
class TwoSampleData:
    """Observed samples; ``sample_a`` is group 1, ``sample_b`` group 2."""

    sample_a: np.ndarray
    sample_b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.sample_a, dtype=float).ravel()
        b = np.asarray(self.sample_b, dtype=float).ravel()
        if a.size < 2 or b.size < 2:
            raise ValueError(f"each sample needs at least 2 observations, got {a.size} and {b.size}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("samples contain non-finite values")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "sample_a", a)
        object.__setattr__(self, "sample_b", b)

    @property
    def n1(self):
        return self.sample_a.size

    @property
    def n2(self):
        return self.sample_b.size

    @property
    def pooled(self):
        return np.concatenate([self.sample_a, self.sample_b])

    def shifted(self, c):
        return TwoSampleData(self.sample_a + c, self.sample_b + c)


@dataclass(frozen=True)
class MarginPair:
    """Non-inferiority (``eps_lower``) and non-superiority (``eps_upper``) margins.

    Either margin may be ``math.inf``, which turns the problem into a one-sided
    non-superiority or non-inferiority test.
    """

    eps_lower: float
    eps_upper: float

    def __post_init__(self):
        lo, up = float(self.eps_lower), float(self.eps_upper)
        if math.isnan(lo) or math.isnan(up) or lo < 0 or up < 0:
            raise ValueError(f"margins must be non-negative, got ({lo}, {up})")
        if math.isinf(lo) and math.isinf(up):
            raise ValueError("at most one margin may be infinite")
        object.__setattr__(self, "eps_lower", lo)
        object.__setattr__(self, "eps_upper", up)

    @classmethod
    def symmetric(cls, eps):
        return cls(eps, eps)

    @property
    def lower_active(self):
        return not math.isinf(self.eps_lower)

    @property
    def upper_active(self):
        return not math.isinf(self.eps_upper)

    @property
    def degenerate(self):
        return self.eps_lower == 0.0 and self.eps_upper == 0.0

    def scaled(self, c):
        return MarginPair(self.eps_lower * c, self.eps_upper * c)


@dataclass(frozen=True)
class ShiftedPair:
    """The two pooled vectors the partial tests run on.

    ``x_lower`` is ``(Y1, Y2 + eps_lower)`` and ``x_upper`` is ``(Y1, Y2 - eps_upper)``.
    An inactive side (infinite margin) carries the unshifted pooled data as a
    placeholder and is ignored downstream.
    """

    x_lower: np.ndarray
    x_upper: np.ndarray
    n1: int
    lower_active: bool = True
    upper_active: bool = True

    @property
    def n(self):
        return self.x_lower.size

    @property
    def n2(self):
        return self.n - self.n1


def shift_for_margins(data, margins):
    pooled = data.pooled
    n1 = data.n1
    x_lower = pooled.copy()
    x_upper = pooled.copy()
    if margins.lower_active:
        x_lower[n1:] += margins.eps_lower
    if margins.upper_active:
        x_upper[n1:] -= margins.eps_upper
    return ShiftedPair(x_lower, x_upper, n1, margins.lower_active, margins.upper_active)


def apply_transform(pooled, kind):
    """Apply a measurement-scale transform to one pooled vector.

    ``midrank`` assigns tied values the average of the ranks they span.
    """
    kind = TransformKind(kind)
    x = np.asarray(pooled, dtype=float)
    if kind is TransformKind.IDENTITY:
        return x.copy()
    if kind is TransformKind.MIDRANK:
        return rankdata(x, method="average", axis=-1)
    if kind is TransformKind.LOG:
        bad = np.flatnonzero(~(x > 0))
        if bad.size:
            raise TransformDomainError(kind, int(bad[0]), float(x.flat[bad[0]]))
        return np.log(x)
    bad = np.flatnonzero(~(x >= 0))
    if bad.size:
        raise TransformDomainError(kind, int(bad[0]), float(x.flat[bad[0]]))
    return np.sqrt(x)


def transform_pair(pair, kind):
    """Transform both shifted vectors of ``pair`` independently."""
    kind = TransformKind(kind)
    if kind is TransformKind.IDENTITY:
        return pair
    return ShiftedPair(
        apply_transform(pair.x_lower, kind) if pair.lower_active else pair.x_lower,
        apply_transform(pair.x_upper, kind) if pair.upper_active else pair.x_upper,
        pair.n1,
        pair.lower_active,
        pair.upper_active,
    )
