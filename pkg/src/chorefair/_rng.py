"""Counter-based hashing RNG.

Every draw is a pure function of a key and a tuple of integer counters, so
values never depend on the order in which they are requested. The mixer is
the SplitMix64 finalizer applied once per counter word.
"""

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def hash_words(key, *words):
    """Hash ``key`` and any number of integer arrays to uint64 (all broadcast together)."""
    if isinstance(key, (int, np.integer)):
        key = int(key) & _MASK64
    with np.errstate(over="ignore"):
        h = _mix(np.asarray(key, dtype=np.uint64) + _GAMMA)
        for w in words:
            w = np.asarray(w).astype(np.uint64)
            h = _mix(h + (w + np.uint64(1)) * _GAMMA)
    return h


def uniform_open01(key, *words):
    """Uniform doubles strictly inside (0, 1), one per broadcast counter tuple."""
    h = hash_words(key, *words)
    return ((h >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def derive_seed(master, *words):
    """Derive a 64-bit child seed from a master seed and integer labels."""
    return int(hash_words(master, *words))


def derive_seeds(master, *words):
    """Vectorised :func:`derive_seed`; returns a uint64 array."""
    return hash_words(master, *words)
