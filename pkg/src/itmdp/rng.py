"""Counter-style pseudo-random numbers for reproducible simulation.

The generator is SplitMix64: a 64-bit state advanced by a fixed odd
constant, with the output produced by a finalizing bit mixer.  It is
trivially splittable, so every trajectory gets its own substream derived
from ``(seed, trajectory_index)`` and results do not depend on how
trajectories are scheduled.  The same arithmetic is re-implemented as a
scalar loop inside the compiled kernels; the two paths are bit-identical
and a test pins that.

Uniform doubles are built as ``(z >> 11) * 2**-53``, giving values in
``[0, 1)`` on the usual 53-bit grid.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)
_U64_MASK = (1 << 64) - 1
_INV_2_53 = 2.0**-53


def mix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """SplitMix64 finalizer; works on uint64 scalars and arrays alike."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * MIX_1
        z = (z ^ (z >> np.uint64(27))) * MIX_2
        return z ^ (z >> np.uint64(31))


def substream_states(seed: int, n: int) -> np.ndarray:
    """Initial SplitMix64 states for ``n`` trajectory substreams.

    Stream ``i`` starts from ``mix64(seed XOR mix64((i + 1) * GOLDEN))``;
    the double mixing decorrelates both the seed and the index patterns.
    """
    if not 0 <= seed <= _U64_MASK:
        raise ValueError("seed must be an integer in [0, 2**64)")
    s = np.uint64(seed)
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(s ^ mix64(idx * GOLDEN))


def uniforms(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Advance each stream one step; return (new_states, doubles in [0,1))."""
    with np.errstate(over="ignore"):
        states = states + GOLDEN
    z = mix64(states)
    return states, (z >> np.uint64(11)).astype(np.float64) * _INV_2_53
