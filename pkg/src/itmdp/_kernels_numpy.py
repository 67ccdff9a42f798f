"""Pure-numpy simulation kernels.

Trajectories advance in lockstep: each pass of the stage loop performs
one stage for every trajectory at once.  Per-trajectory accumulators
live in dedicated array slots and every floating-point operation touches
a slot in the same order as the compiled kernel's per-trajectory loop,
which is what makes the two backends bit-identical.  Categorical draws
use the running-prefix-sum rule: the sampled index is the number of
prefix sums less than or equal to the uniform draw, clamped to the last
index.
"""

from __future__ import annotations

import numpy as np

from .rng import uniforms

BELIEF_FLOOR = 1e-300


def _pick(cum: np.ndarray, v: np.ndarray) -> np.ndarray:
    # index of the first prefix sum exceeding v; the last column is
    # excluded so rounding in the final prefix sum cannot overflow the
    # index range
    return (cum[:, :-1] <= v[:, None]).sum(axis=1, dtype=np.int64)


def run_mdp(
    p: np.ndarray,
    cost: np.ndarray,
    cost_m: np.ndarray,
    policy: np.ndarray,
    x0: np.ndarray,
    rng_states: np.ndarray,
    stages: int,
    burn_in: int,
    fp_source: int,
    fp_target: int,
):
    """Simulate fixed-policy trajectories; returns per-trajectory stats.

    With ``fp_source/fp_target >= 0``, first-passage times from source to
    target are recorded and the state teleports back to the source after
    each hit (renewal restarts); passage tracking ignores burn-in.
    """
    n = p.shape[1]
    traj = x0.shape[0]
    states = rng_states.copy()
    s = x0.astype(np.int64).copy()

    cost_sum = np.zeros(traj)
    maint_sum = np.zeros(traj)
    occupancy = np.zeros((traj, n), dtype=np.int64)
    fp_count = np.zeros(traj, dtype=np.int64)
    fp_sum = np.zeros(traj)
    fp_sumsq = np.zeros(traj)

    track = fp_source >= 0 and fp_target >= 0
    armed = (s == fp_source) if track else np.zeros(traj, dtype=bool)
    entry = np.zeros(traj, dtype=np.int64)

    rows_idx = np.arange(traj)
    for k in range(stages):
        u = policy[s]
        states, v = uniforms(states)
        cum = np.cumsum(p[u, s, :], axis=1)
        nxt = _pick(cum, v)
        if k >= burn_in:
            cost_sum += cost[u, s, nxt]
            maint_sum += cost_m[u, s, nxt]
            np.add.at(occupancy, (rows_idx, s), 1)
        if track:
            hit = armed & (nxt == fp_target)
            if hit.any():
                duration = (k + 1 - entry[hit] + 1).astype(np.float64)
                fp_count[hit] += 1
                fp_sum[hit] += duration
                fp_sumsq[hit] += duration * duration
                nxt = np.where(hit, fp_source, nxt)
                entry = np.where(hit, k + 1, entry)
            fresh = ~armed & (nxt == fp_source)
            entry = np.where(fresh, k + 1, entry)
            armed = armed | fresh
        s = nxt

    return cost_sum, maint_sum, occupancy, fp_count, fp_sum, fp_sumsq


def run_pomdp_threshold(
    p: np.ndarray,
    cost: np.ndarray,
    cost_m: np.ndarray,
    obs: np.ndarray,
    x0: np.ndarray,
    b0: np.ndarray,
    rng_states: np.ndarray,
    stages: int,
    burn_in: int,
    defend_mass: float,
    reset_mass: float,
):
    """Simulate hidden-state trajectories under the belief threshold rule.

    Per stage and per trajectory: act on the current belief, draw the
    hidden transition, accrue cost, draw the observation from the new
    hidden state, then apply the exact belief recursion (predict, weight
    by the observation likelihood, flush components below 1e-300,
    normalize).  A zero normalizer flags the trajectory and resets its
    belief to uniform; it cannot occur when observations are drawn from
    the model itself.
    """
    n = p.shape[1]
    traj = x0.shape[0]
    states = rng_states.copy()
    s = x0.astype(np.int64).copy()
    b = b0.astype(np.float64).copy()

    cost_sum = np.zeros(traj)
    maint_sum = np.zeros(traj)
    occupancy = np.zeros((traj, n), dtype=np.int64)
    dead_end = np.zeros(traj, dtype=np.uint8)

    rows_idx = np.arange(traj)
    for k in range(stages):
        u = np.where(b[:, 2] >= reset_mass, 2, np.where(b[:, 1] >= defend_mass, 1, 0))
        states, v1 = uniforms(states)
        cum = np.cumsum(p[u, s, :], axis=1)
        nxt = _pick(cum, v1)
        if k >= burn_in:
            cost_sum += cost[u, s, nxt]
            maint_sum += cost_m[u, s, nxt]
            np.add.at(occupancy, (rows_idx, s), 1)

        states, v2 = uniforms(states)
        q_next = obs[u, nxt, :]
        z = _pick(np.cumsum(q_next, axis=1), v2)

        p_u = p[u]  # (traj, n, n)
        predicted = b[:, 0, None] * p_u[:, 0, :]
        for j in range(1, n):
            predicted = predicted + b[:, j, None] * p_u[:, j, :]
        likelihood = np.take_along_axis(obs[u], z[:, None, None], axis=2)[:, :, 0]
        raw = likelihood * predicted
        raw = np.where(raw < BELIEF_FLOOR, 0.0, raw)
        total = raw[:, 0]
        for j in range(1, n):
            total = total + raw[:, j]
        zero = total == 0.0
        if zero.any():
            dead_end[zero] = 1
        safe = np.where(zero, 1.0, total)
        b = np.where(zero[:, None], 1.0 / n, raw / safe[:, None])
        s = nxt

    return cost_sum, maint_sum, occupancy, dead_end
