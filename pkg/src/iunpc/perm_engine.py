"""Joint permutation distribution of the two partial statistics.

Both partial statistics are always evaluated on the same label permutation.
Only the group split matters to a mean-difference statistic, so Monte Carlo
rows are drawn with a partial Fisher-Yates shuffle that stops after the first
``n1`` positions, and exhaustive mode enumerates group splits rather than all
``n!`` orderings.

Summation order is fixed: group-a sums run over the members of the split in
ascending original index order and group-b sums are ``total - group_a``.
Each statistic is therefore a function of the split alone. Any row whose
split equals the observed one, identity included, reproduces the observed
value bit for bit, and ``>=`` comparisons need no tolerance.
"""

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from numba import njit, prange

from . import _rng
from ._validation import check_positive_int

DEFAULT_PERMUTATIONS = 100_000
DEFAULT_MAX_SPLITS = 200_000


@dataclass(frozen=True)
class PermutationPlan:
    """How the permutation distribution is sampled.

    Parameters
    ----------
    n_permutations : int
        Number of Monte Carlo rows R. Ignored when ``exhaustive``.
    exhaustive : bool
        Enumerate every group split once instead of sampling.
    seed : int
        Unsigned 64-bit seed of the permutation stream.
    include_identity : bool
        Replace the first Monte Carlo row by the identity permutation, which
        guarantees every p-value statistic is at least ``1/R``.
    max_splits : int
        Refuse exhaustive enumeration beyond this many splits.
    """

    n_permutations: int = DEFAULT_PERMUTATIONS
    exhaustive: bool = False
    seed: int = _rng.DEFAULT_SEED
    include_identity: bool = False
    max_splits: int = DEFAULT_MAX_SPLITS

    def __post_init__(self):
        check_positive_int(self.n_permutations, "n_permutations")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def mode(self):
        return "exhaustive" if self.exhaustive else "monte_carlo"

    @property
    def key(self):
        return _rng.stream_key(self.seed, _rng.STREAM_PERMUTATION)

    def to_dict(self):
        return {
            "mode": self.mode,
            "n_permutations": self.n_permutations,
            "seed": int(self.seed),
            "include_identity": self.include_identity,
            "max_splits": self.max_splits,
        }


class EnumerationCapError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class JointPermutationDistribution:
    """Paired rows ``(t_lower[r], t_upper[r])``, each from one shared permutation."""

    t_lower: np.ndarray
    t_upper: np.ndarray
    observed_lower: float
    observed_upper: float
    plan: PermutationPlan
    n1: int
    n: int
    lower_active: bool = True
    upper_active: bool = True

    @property
    def n_rows(self):
        return self.t_lower.size

    def permutation(self, r):
        """Label permutation that produced row ``r``."""
        if self.plan.exhaustive:
            split = _nth_split(self.n, self.n1, r)
            rest = np.setdiff1d(np.arange(self.n), split)
            return np.concatenate([split, rest])
        if self.plan.include_identity and r == 0:
            return np.arange(self.n)
        return draw_permutation(self.n, self.plan.key, r)


# kernels ---------------------------------------------------------------


@njit(inline="always", cache=True)
def _pair_stats(sl, su, totl, totu, n1, n2):
    t_lower = (totl - sl) / n2 - sl / n1
    t_upper = su / n1 - (totu - su) / n2
    return t_lower, t_upper


@njit(cache=True)
def _shuffle(n, key, index, steps, perm):
    # partial Fisher-Yates; row ``index`` owns counters index*(n-1) ...
    base = np.uint64(index) * np.uint64(n - 1)
    for i in range(n):
        perm[i] = i
    for i in range(steps):
        u = _rng._uniform(key, base + np.uint64(i))
        j = i + np.int64(u * (n - i))
        p = perm[j]
        perm[j] = perm[i]
        perm[i] = p


@njit(cache=True)
def _observed(xl, xu, n1):
    n = xl.size
    totl = 0.0
    totu = 0.0
    for i in range(n):
        totl += xl[i]
        totu += xu[i]
    sl = 0.0
    su = 0.0
    for i in range(n1):
        sl += xl[i]
        su += xu[i]
    return _pair_stats(sl, su, totl, totu, n1, n - n1)


@njit(inline="always", cache=True)
def _masked_sums(xl, xu, perm, n1, mask):
    # group-a sums in original index order, so equal splits give equal bits
    n = xl.size
    for i in range(n):
        mask[i] = False
    for i in range(n1):
        mask[perm[i]] = True
    sl = 0.0
    su = 0.0
    for i in range(n):
        if mask[i]:
            sl += xl[i]
            su += xu[i]
    return sl, su


@njit(cache=True)
def _stats_for_labels(xl, xu, labels, n1):
    n = xl.size
    totl = 0.0
    totu = 0.0
    for i in range(n):
        totl += xl[i]
        totu += xu[i]
    mask = np.zeros(n, np.bool_)
    sl, su = _masked_sums(xl, xu, labels, n1, mask)
    return _pair_stats(sl, su, totl, totu, n1, n - n1)


@njit(cache=True)
def _mc_rows(xl, xu, n1, n_rows, key, include_identity):
    n = xl.size
    n2 = n - n1
    totl = 0.0
    totu = 0.0
    for i in range(n):
        totl += xl[i]
        totu += xu[i]
    out_l = np.empty(n_rows)
    out_u = np.empty(n_rows)
    perm = np.empty(n, np.int64)
    mask = np.empty(n, np.bool_)
    k = np.uint64(key)
    for r in range(n_rows):
        if include_identity and r == 0:
            for i in range(n):
                perm[i] = i
        else:
            _shuffle(n, k, r, n1, perm)
        sl, su = _masked_sums(xl, xu, perm, n1, mask)
        out_l[r], out_u[r] = _pair_stats(sl, su, totl, totu, n1, n2)
    return out_l, out_u


@njit(cache=True)
def _split_rows(xl, xu, splits):
    n = xl.size
    n_rows, n1 = splits.shape
    n2 = n - n1
    totl = 0.0
    totu = 0.0
    for i in range(n):
        totl += xl[i]
        totu += xu[i]
    out_l = np.empty(n_rows)
    out_u = np.empty(n_rows)
    for r in range(n_rows):
        sl = 0.0
        su = 0.0
        for i in range(n1):
            sl += xl[splits[r, i]]
            su += xu[splits[r, i]]
        out_l[r], out_u[r] = _pair_stats(sl, su, totl, totu, n1, n2)
    return out_l, out_u


@njit(parallel=True, cache=True)
def _batch_counts(xl, xu, n1, n_rows, keys):
    """Tail counts ``#{r: T*_r >= T_obs}`` per side for each dataset row of a batch."""
    m_total, n = xl.shape
    n2 = n - n1
    count_l = np.zeros(m_total, np.int64)
    count_u = np.zeros(m_total, np.int64)
    for m in prange(m_total):
        perm = np.empty(n, np.int64)
        mask = np.empty(n, np.bool_)
        rl = xl[m]
        ru = xu[m]
        ol, ou = _observed(rl, ru, n1)
        totl = 0.0
        totu = 0.0
        for i in range(n):
            totl += rl[i]
            totu += ru[i]
        key = keys[m]
        cl = 0
        cu = 0
        for r in range(n_rows):
            _shuffle(n, key, r, n1, perm)
            sl, su = _masked_sums(rl, ru, perm, n1, mask)
            tl, tu = _pair_stats(sl, su, totl, totu, n1, n2)
            if tl >= ol:
                cl += 1
            if tu >= ou:
                cu += 1
        count_l[m] = cl
        count_u[m] = cu
    return count_l, count_u


# public API -------------------------------------------------------------


def draw_permutation(n, key, index=0):
    """Uniform random permutation of ``0 .. n-1`` at position ``index`` of stream ``key``.

    Deterministic in ``(key, index)``. Its first ``n1`` entries are the group-a
    labels of Monte Carlo row ``index`` for any ``n1``.
    """
    n = check_positive_int(n, "n", minimum=2)
    perm = np.empty(n, np.int64)
    _shuffle(n, np.uint64(key), index, n - 1, perm)
    return perm


def count_splits(n, n1):
    return math.comb(n, n1)


def enumerate_splits(n, n1, cap=DEFAULT_MAX_SPLITS):
    """All group-a index sets of size ``n1``, in lexicographic order."""
    total = count_splits(n, n1)
    if total > cap:
        raise EnumerationCapError(f"C({n}, {n1}) = {total} splits exceeds the cap of {cap}")
    flat = np.fromiter(
        (i for combo in combinations(range(n), n1) for i in combo), dtype=np.int64, count=total * n1
    )
    return flat.reshape(total, n1)


def _nth_split(n, n1, r):
    # r-th combination in lexicographic order
    out = []
    start = 0
    for slot in range(n1):
        for v in range(start, n):
            block = math.comb(n - v - 1, n1 - slot - 1)
            if r < block:
                out.append(v)
                start = v + 1
                break
            r -= block
    return np.array(out, dtype=np.int64)


def partial_statistics(pair, labels=None):
    """``(t_lower, t_upper)`` of ``pair`` under label permutation ``labels``.

    ``t_lower`` is mean(group b) minus mean(group a) on ``x_lower``; ``t_upper``
    is mean(group a) minus mean(group b) on ``x_upper``. ``None`` means identity.
    """
    if labels is None:
        return _observed(pair.x_lower, pair.x_upper, pair.n1)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size != pair.n:
        raise ValueError(f"labels has {labels.size} entries, expected {pair.n}")
    return _stats_for_labels(pair.x_lower, pair.x_upper, labels, pair.n1)


def joint_distribution(pair, plan):
    xl = np.ascontiguousarray(pair.x_lower, dtype=float)
    xu = np.ascontiguousarray(pair.x_upper, dtype=float)
    obs_l, obs_u = _observed(xl, xu, pair.n1)
    if plan.exhaustive:
        splits = enumerate_splits(pair.n, pair.n1, plan.max_splits)
        t_l, t_u = _split_rows(xl, xu, splits)
    else:
        t_l, t_u = _mc_rows(xl, xu, pair.n1, plan.n_permutations, np.uint64(plan.key), plan.include_identity)
    return JointPermutationDistribution(
        t_l, t_u, obs_l, obs_u, plan, pair.n1, pair.n, pair.lower_active, pair.upper_active
    )


def pvalue(values, observed):
    """Fraction of ``values`` at or above ``observed`` (exact comparison)."""
    values = np.asarray(values)
    if values.size == 0:
        raise ValueError("empty permutation stream")
    return np.count_nonzero(values >= observed) / values.size


def batch_partial_pvalues(x_lower, x_upper, n1, n_rows, keys):
    """Partial p-value statistics for a batch of datasets.

    Rows of ``x_lower``/``x_upper`` are pooled vectors of independent datasets;
    dataset ``m`` draws its permutations from stream ``keys[m]``.
    """
    cl, cu = _batch_counts(
        np.ascontiguousarray(x_lower, dtype=float),
        np.ascontiguousarray(x_upper, dtype=float),
        int(n1),
        int(n_rows),
        np.ascontiguousarray(keys, dtype=np.uint64),
    )
    return cl / n_rows, cu / n_rows
