"""Deterministic counter-based randomness.

Every random quantity in the toolkit derives from a 64-bit master seed
through splitmix64 finalizers, so results are reproducible bit-for-bit and
independent of batching and worker count:

    child(master, i) = splitmix64(master + (i + 1) * GOLDEN)
    u(i, n)          = splitmix64(child + n * GOLDEN) * 2^-64   in [0, 1)

Path i's n-th step uses u(i, n); auxiliary consumers (bootstrap, resampling)
derive their own numpy generators from child seeds with distinct tags.
"""

from __future__ import annotations

import numpy as np

_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x):
    """Vectorized splitmix64 finalizer on uint64 input."""
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (x + GOLDEN) & _MASK
        z = ((z ^ (z >> np.uint64(30))) * _MIX1) & _MASK
        z = ((z ^ (z >> np.uint64(27))) * _MIX2) & _MASK
        return z ^ (z >> np.uint64(31))


def child_seed(master: int, index) -> np.ndarray:
    """64-bit child seed(s) for path index (scalar or array)."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return splitmix64(np.uint64(master) + (idx + np.uint64(1)) * GOLDEN)


def uniform_block(children, start: int, count: int) -> np.ndarray:
    """Uniforms u(i, n) for n in [start, start+count), shape (len(children), count)."""
    children = np.atleast_1d(np.asarray(children, dtype=np.uint64))
    ctr = children[:, None] + np.arange(start, start + count, dtype=np.uint64)[None, :] * GOLDEN
    with np.errstate(over="ignore"):
        bits = splitmix64(ctr)
    return (bits >> np.uint64(11)).astype(np.float64) * (2.0**-53)


def letters_block(cum_weights: np.ndarray, children, start: int, count: int) -> np.ndarray:
    """Generator letters via the inverse CDF of the step distribution."""
    u = uniform_block(children, start, count)
    return np.searchsorted(cum_weights, u, side="right").astype(np.int8)


def derived_generator(master: int, *tags: int) -> np.random.Generator:
    """numpy Generator for auxiliary sampling, derived deterministically."""
    s = np.uint64(master)
    for t in tags:
        s = splitmix64(s ^ splitmix64(np.uint64(t)))
    return np.random.Generator(np.random.PCG64(int(s)))
