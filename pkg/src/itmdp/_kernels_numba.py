"""Compiled simulation kernels (numba).

Trajectory-parallel twins of :mod:`itmdp._kernels_numpy`.  Each
trajectory owns an output slot and a private random stream, so results
do not depend on the parallel schedule; the per-trajectory operation
order matches the lockstep numpy kernels exactly, keeping the two
backends bit-identical.  Compiled code is cached on disk after the
first call.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)
RS_30 = np.uint64(30)
RS_27 = np.uint64(27)
RS_31 = np.uint64(31)
RS_11 = np.uint64(11)
INV_2_53 = 2.0**-53
BELIEF_FLOOR = 1e-300


@njit(cache=True, inline="always")
def _next_uniform(state):
    state = state + GOLDEN
    z = state
    z = z ^ (z >> RS_30)
    z = z * MIX_1
    z = z ^ (z >> RS_27)
    z = z * MIX_2
    z = z ^ (z >> RS_31)
    return state, (z >> RS_11) * INV_2_53


@njit(cache=True, inline="always")
def _pick_row(row, v):
    n = row.shape[0]
    c = 0.0
    idx = n - 1
    for j in range(n - 1):
        c += row[j]
        if v < c:
            idx = j
            break
    return idx


@njit(cache=True, parallel=True)
def run_mdp(p, cost, cost_m, policy, x0, rng_states, stages, burn_in, fp_source, fp_target):
    n = p.shape[1]
    traj = x0.shape[0]
    cost_sum = np.zeros(traj)
    maint_sum = np.zeros(traj)
    occupancy = np.zeros((traj, n), dtype=np.int64)
    fp_count = np.zeros(traj, dtype=np.int64)
    fp_sum = np.zeros(traj)
    fp_sumsq = np.zeros(traj)
    track = fp_source >= 0 and fp_target >= 0

    for t in prange(traj):
        state = rng_states[t]
        s = x0[t]
        armed = track and s == fp_source
        entry = np.int64(0)
        c_total = 0.0
        m_total = 0.0
        for k in range(stages):
            u = policy[s]
            state, v = _next_uniform(state)
            nxt = _pick_row(p[u, s], v)
            if k >= burn_in:
                c_total += cost[u, s, nxt]
                m_total += cost_m[u, s, nxt]
                occupancy[t, s] += 1
            if track:
                if armed and nxt == fp_target:
                    duration = float(k + 1 - entry + 1)
                    fp_count[t] += 1
                    fp_sum[t] += duration
                    fp_sumsq[t] += duration * duration
                    nxt = fp_source
                    entry = np.int64(k + 1)
                elif not armed and nxt == fp_source:
                    armed = True
                    entry = np.int64(k + 1)
            s = nxt
        cost_sum[t] = c_total
        maint_sum[t] = m_total

    return cost_sum, maint_sum, occupancy, fp_count, fp_sum, fp_sumsq


@njit(cache=True, parallel=True)
def run_pomdp_threshold(
    p, cost, cost_m, obs, x0, b0, rng_states, stages, burn_in, defend_mass, reset_mass
):
    n = p.shape[1]
    o = obs.shape[2]
    traj = x0.shape[0]
    cost_sum = np.zeros(traj)
    maint_sum = np.zeros(traj)
    occupancy = np.zeros((traj, n), dtype=np.int64)
    dead_end = np.zeros(traj, dtype=np.uint8)

    for t in prange(traj):
        state = rng_states[t]
        s = x0[t]
        b = b0[t].copy()
        raw = np.empty(n)
        c_total = 0.0
        m_total = 0.0
        for k in range(stages):
            if b[2] >= reset_mass:
                u = 2
            elif b[1] >= defend_mass:
                u = 1
            else:
                u = 0
            state, v1 = _next_uniform(state)
            nxt = _pick_row(p[u, s], v1)
            if k >= burn_in:
                c_total += cost[u, s, nxt]
                m_total += cost_m[u, s, nxt]
                occupancy[t, s] += 1

            state, v2 = _next_uniform(state)
            z = _pick_row(obs[u, nxt], v2)

            for i in range(n):
                acc = b[0] * p[u, 0, i]
                for j in range(1, n):
                    acc = acc + b[j] * p[u, j, i]
                value = obs[u, i, z] * acc
                if value < BELIEF_FLOOR:
                    value = 0.0
                raw[i] = value
            total = raw[0]
            for i in range(1, n):
                total = total + raw[i]
            if total == 0.0:
                dead_end[t] = 1
                for i in range(n):
                    b[i] = 1.0 / n
            else:
                for i in range(n):
                    b[i] = raw[i] / total
            s = nxt
        cost_sum[t] = c_total
        maint_sum[t] = m_total

    return cost_sum, maint_sum, occupancy, dead_end
