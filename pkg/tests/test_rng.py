"""The generator must match a straightforward big-integer implementation
of the same mixing function, bit for bit. The reference below is written
with plain Python ints so any vectorization mistake in the numpy version
shows up immediately."""

import numpy as np
import pytest

from itmdp.rng import GOLDEN, mix64, substream_states, uniforms

MASK = (1 << 64) - 1
GOLDEN_INT = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB


def ref_mix64(z):
    z &= MASK
    z = ((z ^ (z >> 30)) * MIX_1) & MASK
    z = ((z ^ (z >> 27)) * MIX_2) & MASK
    return z ^ (z >> 31)


def ref_substream(seed, i):
    return ref_mix64(seed ^ ref_mix64(((i + 1) * GOLDEN_INT) & MASK))


def ref_draw(state):
    state = (state + GOLDEN_INT) & MASK
    return state, (ref_mix64(state) >> 11) * 2.0 ** -53


def test_mix64_matches_reference():
    values = [0, 1, 2, GOLDEN_INT, MASK, 0xDEADBEEF, 1 << 63]
    got = mix64(np.array(values, dtype=np.uint64))
    for v, g in zip(values, got):
        assert int(g) == ref_mix64(v)


def test_mix64_frozen_values():
    assert int(mix64(np.uint64(0))) == 0
    assert int(mix64(np.uint64(1))) == 0x5692161D100B05E5


def test_substream_states_match_reference():
    for seed in (0, 1, 42, 2**64 - 1):
        states = substream_states(seed, 5)
        assert states.dtype == np.uint64
        for i in range(5):
            assert int(states[i]) == ref_substream(seed, i)


def test_substream_first_uniforms_frozen():
    states = substream_states(0, 1)
    states, u = uniforms(states)
    assert float(u[0]) == 0.33805245419550545
    states, u = uniforms(states)
    assert float(u[0]) == 0.2691302712263999


def test_uniform_stream_matches_reference():
    states = substream_states(7, 3)
    refs = [int(s) for s in states]
    for _ in range(50):
        states, u = uniforms(states)
        for k in range(3):
            refs[k], expect = ref_draw(refs[k])
            assert float(u[k]) == expect
            assert int(states[k]) == refs[k]


def test_uniforms_in_unit_interval():
    states = substream_states(123, 64)
    for _ in range(200):
        states, u = uniforms(states)
        assert np.all(u >= 0.0)
        assert np.all(u < 1.0)


def test_uniforms_returns_fresh_state_array():
    states = substream_states(5, 4)
    before = states.copy()
    new_states, _ = uniforms(states)
    assert np.array_equal(states, before)
    assert not np.array_equal(new_states, before)


def test_substreams_distinct():
    states = substream_states(9, 1000)
    assert len(set(int(s) for s in states)) == 1000


def test_negative_seed_rejected():
    with pytest.raises(ValueError):
        substream_states(-1, 2)


def test_seed_too_large_rejected():
    with pytest.raises(ValueError):
        substream_states(1 << 64, 2)
