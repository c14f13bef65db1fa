"""Counter-based random streams.

Every random quantity in the package is addressed by a key derived from
``(seed, stream, replicate)`` plus a draw counter, so a value never depends on
how many other values were drawn before it or on which thread drew them.

Uniforms inside the numba kernels come from a SplitMix64 mix of
``key + (counter + 1) * golden``. Gaussian data draws use numpy's Philox
generator keyed by the same 64-bit stream keys.
"""

import numpy as np
from numba import njit

DEFAULT_SEED = 12345

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB

# stream identifiers; new streams must take fresh values
STREAM_PERMUTATION = 1
STREAM_BOUNDARY_DATA = 2
STREAM_BOUNDARY_PERM = 3
STREAM_POWER_DATA = 4
STREAM_POWER_PERM = 5
STREAM_SIZE_CHECK = 6
STREAM_LOWER_BOUNDARY_DATA = 7
STREAM_LOWER_BOUNDARY_PERM = 8
STREAM_SIZE_CHECK_PERM = 9


def _mix(z):
    z = ((z ^ (z >> 30)) * _MUL1) & _MASK
    z = ((z ^ (z >> 27)) * _MUL2) & _MASK
    return z ^ (z >> 31)


def stream_key(seed, *path):
    """Derive a 64-bit stream key from a seed and a path of integer labels."""
    h = _mix((int(seed) + _GOLDEN) & _MASK)
    for label in path:
        h = _mix((h ^ ((int(label) + 1) * _GOLDEN)) & _MASK)
    return h


def replicate_keys(seed, stream, start, count):
    """Keys for replicates ``start .. start+count-1`` of one stream."""
    base = stream_key(seed, stream)
    return np.array(
        [_mix((base ^ ((r + 1) * _GOLDEN)) & _MASK) for r in range(start, start + count)],
        dtype=np.uint64,
    )


def data_generator(key):
    """numpy Generator on a Philox stream keyed by ``key``."""
    return np.random.Generator(np.random.Philox(key=int(key)))


_G = np.uint64(_GOLDEN)
_M1 = np.uint64(_MUL1)
_M2 = np.uint64(_MUL2)
_INV53 = 1.0 / 9007199254740992.0


@njit(inline="always", cache=True)
def _uniform(key, counter):
    z = key + (counter + np.uint64(1)) * _G
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return np.float64(z >> np.uint64(11)) * _INV53


@njit(cache=True)
def uniforms(key, start, count):
    """Uniforms on [0, 1) at counters ``start .. start+count-1`` of ``key``."""
    out = np.empty(count)
    k = np.uint64(key)
    for i in range(count):
        out[i] = _uniform(k, np.uint64(start + i))
    return out
