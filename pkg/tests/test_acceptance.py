"""Top-level acceptance suite.

Each test here corresponds to one external acceptance criterion, with
the tolerance and budget stated in the assertion itself. Slow paths get
an explicit wall-clock bound; a compiled-backend warm-up happens before
any timer starts so JIT latency is not billed to the criterion.
"""

import json
import math
import os
import subprocess
import sys
import time
from collections import deque
from itertools import product

import numpy as np
import pytest

from itmdp import (
    ItParams,
    POLICY_DEFEND,
    POLICY_RESET,
    POLICY_WAIT,
    Belief,
    DetectorParams,
    SimConfig,
    ThresholdPolicy,
    build_mdp,
    build_observed_mdp,
    enumerate_policies,
    evaluate_triple,
    first_passage,
    lambda_defend,
    lambda_reset,
    lambda_wait,
    mttf_defend,
    mttf_wait,
    partition_sweep,
    pomdp_trace,
    simulate,
    tie_groups,
    update,
)
from itmdp.itmodel import REGION_LABELS
from itmdp.semimarkov import (
    SemiMarkovModel,
    evaluate_smdp_policy,
    transition_over_time,
    uniformize,
)
from itmdp.mdp import GenericMdp, StationaryPolicy, evaluate_policy

from conftest import DETECTOR_A, PARAMS_A, PARAMS_MEETING, random_params

STRUCTURED = {(0, 0, 2): "W", (0, 1, 2): "D", (0, 2, 2): "R"}


def test_criterion_1_closed_forms_match_enumeration():
    rng = np.random.default_rng(108)
    started = time.perf_counter()
    for _ in range(1000):
        params = random_params(rng)
        model = build_mdp(params)
        gains = {"W": lambda_wait(params), "D": lambda_defend(params),
                 "R": lambda_reset(params)}
        ranked = enumerate_policies(model)
        by_policy = {r.policy.action_of_state: r for r in ranked}
        for actions, label in STRUCTURED.items():
            assert abs(by_policy[actions].gain - gains[label]) < 1e-9
        gap = ranked[1].gain - ranked[0].gain
        if gap > 1e-9:
            best_label = STRUCTURED.get(ranked[0].policy.action_of_state)
            assert best_label is not None
            assert min(gains, key=gains.get) == best_label
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0, f"closed-form sweep took {elapsed:.1f} s"


def test_criterion_2_meeting_point_identity():
    c_R = 2.0
    params = ItParams(p_A=0.5, p_F=0.3, p_D=0.6, p_R=1.0,
                      c_A=0.5 * c_R / 1.5, c_D=0.6 * c_R, c_F=10.0, c_R=c_R)
    triple = evaluate_triple(params)
    target = 2.0 / 3.0
    assert abs(triple.lambda_wait - target) < 1e-12
    assert abs(triple.lambda_defend - target) < 1e-12
    assert abs(triple.lambda_reset - target) < 1e-12


def connected_components(mask):
    """Count 4-connected components of a boolean grid."""
    seen = np.zeros_like(mask, dtype=bool)
    count = 0
    rows, cols = mask.shape
    for start in zip(*np.nonzero(mask & ~seen)):
        if seen[start]:
            continue
        count += 1
        queue = deque([start])
        seen[start] = True
        while queue:
            r, c = queue.popleft()
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < rows and 0 <= cc < cols and mask[rr, cc] \
                        and not seen[rr, cc]:
                    seen[rr, cc] = True
                    queue.append((rr, cc))
    return count


def test_criterion_3_partition_grid_and_junction():
    params = ItParams(**PARAMS_MEETING)
    started = time.perf_counter()
    sweep = partition_sweep(params, "cA-cD", 101)
    region = sweep.region
    labels = np.array(REGION_LABELS)[region]

    for name in "WDR":
        assert connected_components(labels == name) == 1, name

    # triple junction: a 2x2 block that touches all three regions
    xs, ys = sweep.xs, sweep.ys
    hits = []
    for iy in range(100):
        for ix in range(100):
            block = set(labels[iy:iy + 2, ix:ix + 2].ravel()) - {"tie"}
            if {"W", "D", "R"} <= block:
                hits.append(((xs[ix] + xs[ix + 1]) / 2,
                             (ys[iy] + ys[iy + 1]) / 2))
    assert hits
    nearest = min(math.hypot(cx - 1 / 3, cy - 0.6) for cx, cy in hits)
    assert nearest <= math.hypot(0.01, 0.01)

    # 200 sampled cells against the exhaustive-enumeration oracle
    rng = np.random.default_rng(309)
    valid_cells = np.argwhere(labels != "invalid")
    picks = valid_cells[rng.choice(len(valid_cells), size=200, replace=False)]
    for iy, ix in picks:
        cell_params = ItParams(p_A=0.5, p_F=0.3, p_D=0.6, p_R=1.0,
                               c_A=float(xs[ix]), c_D=float(ys[iy]),
                               c_F=2.0, c_R=1.0)
        ranked = enumerate_policies(build_mdp(cell_params))
        gap = ranked[1].gain - ranked[0].gain
        got = labels[iy, ix]
        if gap > 1e-9:
            assert got == STRUCTURED[ranked[0].policy.action_of_state]
        else:
            near = {STRUCTURED.get(r.policy.action_of_state)
                    for r in ranked if r.gain - ranked[0].gain <= 1e-9}
            assert got in near | {"tie"}
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"partition criterion took {elapsed:.1f} s"


def test_criterion_4_region_exclusions_exhaustive():
    params = ItParams(**PARAMS_MEETING)
    sweep = partition_sweep(params, "cA-cD", 101)
    labels = np.array(REGION_LABELS)[sweep.region]
    xg, yg = np.meshgrid(sweep.xs, sweep.ys)  # plane has c_R = 1
    wait_bound = params.p_A / (1.0 + params.p_A)
    assert not np.any((labels == "W") & (xg > wait_bound + 1e-12))
    assert not np.any((labels == "D") & (yg > params.p_D + 1e-12))


def test_criterion_5_weak_reset_bound_certifies_optimality():
    rng = np.random.default_rng(510)
    for _ in range(500):
        p_A = rng.uniform(0.05, 0.95)
        p_F = rng.uniform(0.05, 0.95)
        p_D = rng.uniform(0.0, 0.95)
        weak = p_F * (1 - p_D) / (p_F * (1 - p_D) + p_A + p_D)
        p_R = weak * rng.uniform(0.05, 1.0)
        for _ in range(100):
            c_F = rng.uniform(0.5, 10.0)
            c_R = c_F * rng.uniform(0.05, 1.0)
            params = ItParams(p_A=p_A, p_F=p_F, p_D=p_D, p_R=p_R,
                              c_A=c_F * rng.uniform(0.0, 0.99),
                              c_D=c_R * rng.uniform(0.0, 0.99),
                              c_F=c_F, c_R=c_R)
            l_r = lambda_reset(params)
            assert l_r <= lambda_wait(params) + 1e-12
            assert l_r <= lambda_defend(params) + 1e-12


def test_criterion_6_first_passage_means():
    params = ItParams(**PARAMS_A)
    model = build_mdp(params)
    # warm the compiled backend outside the timed window
    simulate(model, POLICY_WAIT, SimConfig(stages=4, trajectories=2, seed=1))

    started = time.perf_counter()
    runs = ((POLICY_WAIT, mttf_wait(params), 9000),
            (POLICY_DEFEND, mttf_defend(params), 25000))
    for policy, exact, stages in runs:
        cfg = SimConfig(stages=stages, trajectories=64, seed=606)
        out = first_passage(model, policy, 0, 2, cfg)
        fp = out.first_passage
        assert fp.count >= 100_000
        assert abs(fp.mean_stages - exact) <= 0.02 * exact

    certain = ItParams(**{**PARAMS_A, "p_R": 1.0})
    out = first_passage(build_mdp(certain), POLICY_RESET, 0, 2,
                        SimConfig(stages=20000, trajectories=16, seed=7))
    assert out.first_passage.count == 0
    elapsed = time.perf_counter() - started
    assert elapsed < 30.0, f"passage criterion took {elapsed:.1f} s"


def test_criterion_7_cost_decomposition():
    rng = np.random.default_rng(700)
    for _ in range(1000):
        triple = evaluate_triple(random_params(rng))
        for value in (triple.wait, triple.defend, triple.reset):
            assert abs(value.maintenance + value.failure - value.gain) < 1e-10
        assert triple.reset.failure == 0.0


def test_criterion_8_filter_equals_path_enumeration():
    params = ItParams(**PARAMS_A)
    detector = DetectorParams(**DETECTOR_A)
    model = build_observed_mdp(params, detector)
    p, q = model.transition, model.observation
    prior = np.array([1.0, 0.0, 0.0])
    controls = (0, 1, 0, 2, 1)

    checked = impossible = 0
    for observations in product(range(3), repeat=5):
        post = np.zeros(3)
        total = 0.0
        for path in product(range(3), repeat=6):
            w = prior[path[0]]
            for t in range(5):
                w *= p[controls[t], path[t], path[t + 1]]
                w *= q[controls[t], path[t + 1], observations[t]]
                if w == 0.0:
                    break
            post[path[-1]] += w
            total += w
        b = Belief(prior)
        try:
            for u, z in zip(controls, observations):
                b = update(b, u, z, model)
        except Exception as exc:
            assert type(exc).__name__ == "ImpossibleObservationError"
            assert total == 0.0
            impossible += 1
            continue
        assert total > 0.0
        np.testing.assert_allclose(np.asarray(b.probs), post / total,
                                   atol=1e-12)
        checked += 1
    assert checked + impossible == 243
    assert checked > 0 and impossible > 0


def test_criterion_8_perfect_detector_collapse():
    params = ItParams(**PARAMS_A)
    detector = DetectorParams(q_A_given_N=0.0, q_N_given_A=0.0)
    cfg = SimConfig(stages=10_000, trajectories=1, seed=321)
    rows = pomdp_trace(build_mdp(params), detector, ThresholdPolicy(0.5, 0.5),
                       cfg)
    assert len(rows) == 10_000
    for row in rows:
        assert max(row.belief) == 1.0


def test_criterion_9_uniformization_series():
    embedded = GenericMdp(
        transition=np.array([[[0.0, 1.0], [1.0, 0.0]]]),
        cost=np.array([[[1.0, 1.0], [2.0, 2.0]]]),
    )
    smdp = SemiMarkovModel(embedded=embedded,
                           durations=np.array([[[1.0, 1.0], [2.0, 2.0]]]))
    uni = uniformize(smdp)

    np.testing.assert_array_equal(transition_over_time(uni, 0, 0.0), np.eye(2))

    rng = np.random.default_rng(909)
    for _ in range(100):
        t1, t2 = rng.uniform(0.0, 10.0, size=2)
        lhs = transition_over_time(uni, 0, t1) @ transition_over_time(uni, 0, t2)
        rhs = transition_over_time(uni, 0, t1 + t2)
        assert np.abs(lhs - rhs).max() <= 1e-9

    pbar = uni.transition_bar[0]
    for tau in (0.4, 2.0, 9.0):
        mean = tau / uni.d_bar
        term, acc, weight = np.eye(2), np.zeros((2, 2)), math.exp(-mean)
        for m in range(200):
            acc += weight * term
            term = term @ pbar
            weight *= mean / (m + 1)
        assert np.abs(transition_over_time(uni, 0, tau) - acc).max() < 1e-12

    rng = np.random.default_rng(910)
    for _ in range(20):
        n = int(rng.integers(2, 6))
        transition = rng.uniform(0.05, 1.0, size=(1, n, n))
        transition /= transition.sum(axis=2, keepdims=True)
        cost = rng.uniform(0.0, 4.0, size=(1, n, n))
        model = GenericMdp(transition=transition, cost=cost)
        unit = SemiMarkovModel(embedded=model, durations=np.ones((1, n, n)))
        policy = StationaryPolicy((0,) * n)
        discrete = evaluate_policy(model, policy).gain
        assert abs(evaluate_smdp_policy(unit, policy) - discrete) < 1e-10


def run_cli(*args, env_extra=None):
    env = dict(os.environ)
    env.setdefault("ITMDP_BACKEND", "numpy")
    if env_extra:
        env.update(env_extra)
    return subprocess.run([sys.executable, "-m", "itmdp", *args],
                          capture_output=True, env=env)


def test_criterion_10_cli_byte_determinism(tmp_path):
    params_file = tmp_path / "params.json"
    params_file.write_text(json.dumps(PARAMS_A))
    meeting_file = tmp_path / "meeting.json"
    meeting_file.write_text(json.dumps(PARAMS_MEETING))
    detector_file = tmp_path / "detector.json"
    detector_file.write_text(json.dumps(DETECTOR_A))
    smdp_file = tmp_path / "smdp.json"
    smdp_file.write_text(json.dumps({
        "n_states": 2, "n_actions": 1,
        "state_labels": ["s0", "s1"], "action_labels": ["a0"],
        "transition": [[[0.0, 1.0], [1.0, 0.0]]],
        "cost": [[[1.0, 1.0], [2.0, 2.0]]],
        "durations": [[[1.0, 1.0], [2.0, 2.0]]],
    }))

    trace = tmp_path / "trace.csv"
    sweep_out = tmp_path / "sweep.csv"
    commands = [
        ("validate", "--params", str(params_file)),
        ("evaluate", "--params", str(params_file)),
        ("evaluate", "--params", str(params_file), "--json"),
        ("partition", "--params", str(meeting_file), "--grid", "21",
         "--out", str(sweep_out)),
        ("sufficiency", "--params", str(params_file), "--refined", "--json"),
        ("solve", "--params", str(params_file), "--json"),
        ("simulate", "--params", str(params_file), "--policy", "D",
         "--stages", "300", "--trajectories", "6", "--seed", "13"),
        ("simulate", "--params", str(params_file), "--policy", "W",
         "--stages", "400", "--trajectories", "4", "--seed", "99",
         "--passage-source", "N", "--passage-target", "F"),
        ("belief-sim", "--params", str(params_file),
         "--detector", str(detector_file), "--stages", "120",
         "--trajectories", "4", "--seed", "31", "--trace-out", str(trace)),
        ("uniformize", "--smdp", str(smdp_file)),
        ("uniformize", "--smdp", str(smdp_file), "--tau", "1.5",
         "--action", "a0"),
    ]
    for command in commands:
        first = run_cli(*command)
        assert first.returncode == 0, (command, first.stderr)
        file_snapshots = {p: p.read_bytes() for p in (trace, sweep_out)
                          if p.exists()}
        second = run_cli(*command)
        assert second.returncode == 0
        assert first.stdout == second.stdout, command
        for path, snapshot in file_snapshots.items():
            assert path.read_bytes() == snapshot, (command, str(path))
