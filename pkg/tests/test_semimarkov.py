import math

import numpy as np
import pytest

from itmdp import (
    DomainError,
    GenericMdp,
    POLICY_WAIT,
    SemiMarkovModel,
    StationaryPolicy,
    UniformizedModel,
    build_mdp,
    evaluate_policy,
    evaluate_smdp_policy,
    stationary_distribution,
    timed_belief_update,
    transition_over_time,
    uniformize,
)

from conftest import random_unichain_model


def flip_flop():
    """Two states swapping deterministically; holding means 1 and 2."""
    transition = np.array([[[0.0, 1.0], [1.0, 0.0]]])
    cost = np.array([[[1.0, 1.0], [2.0, 2.0]]])
    embedded = GenericMdp(transition=transition, cost=cost)
    durations = np.array([[[1.0, 1.0], [2.0, 2.0]]])
    return SemiMarkovModel(embedded=embedded, durations=durations)


def with_durations(model, per_state):
    d = np.ones_like(model.transition)
    for i, v in enumerate(per_state):
        d[:, i, :] = v
    return SemiMarkovModel(embedded=model, durations=d)


def test_uniformize_flip_flop_pinned():
    uni = uniformize(flip_flop())
    assert uni.d_bar == 1.0
    np.testing.assert_allclose(uni.transition_bar[0],
                               [[0.0, 1.0], [0.5, 0.5]], atol=1e-15)
    np.testing.assert_allclose(uni.exit_means[0], [1.0, 2.0], atol=1e-15)


def test_durations_must_be_constant_per_row():
    transition = np.array([[[0.0, 1.0], [0.5, 0.5]]])
    cost = np.zeros((1, 2, 2))
    embedded = GenericMdp(transition=transition, cost=cost)
    durations = np.array([[[1.0, 1.0], [2.0, 3.0]]])  # branching row disagrees
    with pytest.raises(DomainError):
        uniformize(SemiMarkovModel(embedded=embedded, durations=durations))


def test_durations_ignored_where_impossible():
    smdp = flip_flop()
    d = smdp.durations.copy()
    d[0, 0, 0] = 99.0  # the 0 -> 0 edge has probability zero
    uni = uniformize(SemiMarkovModel(embedded=smdp.embedded, durations=d))
    assert uni.d_bar == 1.0


def test_nonpositive_duration_rejected():
    smdp = flip_flop()
    d = smdp.durations.copy()
    d[0, 0, 1] = 0.0
    bad = SemiMarkovModel(embedded=smdp.embedded, durations=d)
    assert any("positive" in msg for msg in bad.check())
    with pytest.raises(DomainError):
        uniformize(bad)


def test_rate_held_constantly():
    transition = np.array([[[1.0]]])
    cost = np.array([[[3.0]]])
    model = GenericMdp(transition=transition, cost=cost)
    smdp = SemiMarkovModel(embedded=model, durations=np.array([[[2.0]]]))
    assert abs(evaluate_smdp_policy(smdp, StationaryPolicy((0,))) - 3.0) < 1e-15


def test_unit_durations_reduce_to_discrete_gain():
    rng = np.random.default_rng(808)
    for _ in range(20):
        model = random_unichain_model(rng, 4, 2)
        smdp = SemiMarkovModel(embedded=model, durations=np.ones((2, 4, 4)))
        policy = StationaryPolicy(tuple(int(a) for a in rng.integers(0, 2, 4)))
        discrete = evaluate_policy(model, policy).gain
        assert abs(evaluate_smdp_policy(smdp, policy) - discrete) < 1e-10


def test_renewal_ratio_pinned(params_a):
    # embedded chain of the wait policy with state holding times 1, 2, 3;
    # exact rational value of the time-average cost is 15/14
    model = build_mdp(params_a)
    smdp = with_durations(model, (1.0, 2.0, 3.0))
    got = evaluate_smdp_policy(smdp, POLICY_WAIT)
    assert abs(got - 15 / 14) < 1e-14


def test_renewal_matches_continuous_time_simulation(params_a):
    # cost accrues linearly at rate g(i, u, j) over an exponential sojourn
    # with mean d(i); the long-run ratio must match the formula
    model = build_mdp(params_a)
    per_state = (1.0, 2.5, 0.5)
    smdp = with_durations(model, per_state)
    exact = evaluate_smdp_policy(smdp, POLICY_WAIT)

    rng = np.random.default_rng(2025)
    p = model.transition[POLICY_WAIT.as_array(), np.arange(3)]
    g = model.cost[POLICY_WAIT.as_array(), np.arange(3)]
    reps = []
    for _ in range(24):
        state, time_total, cost_total = 0, 0.0, 0.0
        for _ in range(4000):
            nxt = int(rng.choice(3, p=p[state]))
            sojourn = rng.exponential(per_state[state])
            cost_total += g[state, nxt] * sojourn
            time_total += sojourn
            state = nxt
        reps.append(cost_total / time_total)
    reps = np.asarray(reps)
    sem = reps.std(ddof=1) / math.sqrt(len(reps))
    assert abs(reps.mean() - exact) < 3 * sem


def test_transition_over_time_zero_is_identity():
    uni = uniformize(flip_flop())
    out = transition_over_time(uni, 0, 0.0)
    np.testing.assert_array_equal(out, np.eye(2))


def test_transition_rows_sum_to_one_far_out():
    uni = uniformize(flip_flop())
    for tau in (0.5, 3.0, 40.0, 1000.0 * uni.d_bar):
        out = transition_over_time(uni, 0, tau)
        np.testing.assert_allclose(out.sum(axis=1), 1.0, atol=1e-10)
        assert np.all(out >= 0.0)


def test_semigroup_property():
    uni = uniformize(flip_flop())
    rng = np.random.default_rng(4242)
    for _ in range(40):
        t1, t2 = rng.uniform(0.0, 8.0, size=2)
        lhs = transition_over_time(uni, 0, t1) @ transition_over_time(uni, 0, t2)
        rhs = transition_over_time(uni, 0, t1 + t2)
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)


def test_series_matches_long_reference():
    uni = uniformize(flip_flop())
    pbar = uni.transition_bar[0]
    for tau in (0.3, 1.7, 6.0, 19.0):
        mean = tau / uni.d_bar
        term = np.eye(2)
        acc = np.zeros((2, 2))
        weight = math.exp(-mean)
        for m in range(200):
            acc += weight * term
            term = term @ pbar
            weight *= mean / (m + 1)
        got = transition_over_time(uni, 0, tau)
        np.testing.assert_allclose(got, acc, atol=1e-12)


def test_tightening_mass_tolerance_barely_moves_entries():
    uni = uniformize(flip_flop())
    a = transition_over_time(uni, 0, 7.0, mass_tol=1e-12)
    b = transition_over_time(uni, 0, 7.0, mass_tol=1e-15)
    assert np.abs(a - b).max() < 1e-11


def test_uniformization_preserves_stationary_law():
    rng = np.random.default_rng(99)
    model = random_unichain_model(rng, 4, 1)
    smdp = SemiMarkovModel(embedded=model, durations=np.full((1, 4, 4), 2.5))
    uni = uniformize(smdp)
    pi = stationary_distribution(model.transition[0])
    np.testing.assert_allclose(pi @ uni.transition_bar[0], pi, atol=1e-10)

    # state-dependent holding times: the continuous-time law is the
    # duration-weighted embedded law, and it is invariant under F(tau)
    varied = with_durations(model, (1.0, 2.0, 0.5, 4.0))
    uni2 = uniformize(varied)
    weights = pi * np.array([1.0, 2.0, 0.5, 4.0])
    pi_ct = weights / weights.sum()
    for tau in (0.7, 5.0):
        np.testing.assert_allclose(pi_ct @ transition_over_time(uni2, 0, tau),
                                   pi_ct, atol=1e-10)


def test_uniformized_model_validation():
    with pytest.raises(DomainError):
        UniformizedModel(d_bar=-1.0,
                         transition_bar=np.array([[[1.0]]]),
                         exit_means=np.array([[1.0]]))


def test_timed_belief_update(params_a, detector_a):
    from itmdp import observation_matrices

    model = build_mdp(params_a)
    smdp = with_durations(model, (1.0, 1.0, 1.0))
    uni = uniformize(smdp)
    q = observation_matrices(detector_a)
    b = np.array([0.6, 0.4, 0.0])
    # tau = 0 keeps the prediction at the prior, so the result is a pure
    # observation conditioning
    out = timed_belief_update(b, 0, 1, 0.0, uni, q)
    expected = b * q[0, :, 1]
    expected /= expected.sum()
    np.testing.assert_allclose(np.asarray(out.probs), expected, atol=1e-14)


def test_equal_durations_leave_transitions_alone():
    rng = np.random.default_rng(406)
    transition = rng.uniform(0.1, 1.0, size=(2, 3, 3))
    transition /= transition.sum(axis=2, keepdims=True)
    cost = rng.uniform(0.0, 2.0, size=(2, 3, 3))
    model = GenericMdp(transition=transition, cost=cost)
    smdp = SemiMarkovModel(embedded=model,
                           durations=np.full((2, 3, 3), 2.5))
    uni = uniformize(smdp)
    assert uni.d_bar == 2.5
    np.testing.assert_allclose(uni.transition_bar, transition, atol=1e-12)


def test_uniformized_rows_stay_stochastic():
    rng = np.random.default_rng(408)
    for _ in range(1000):
        n = int(rng.integers(2, 5))
        transition = rng.uniform(0.05, 1.0, size=(1, n, n))
        transition /= transition.sum(axis=2, keepdims=True)
        cost = rng.uniform(0.0, 1.0, size=(1, n, n))
        durations = np.broadcast_to(
            rng.uniform(0.2, 5.0, size=(1, n, 1)), (1, n, n)).copy()
        smdp = SemiMarkovModel(embedded=GenericMdp(transition=transition,
                                                   cost=cost),
                               durations=durations)
        rows = uniformize(smdp).transition_bar.sum(axis=2)
        np.testing.assert_allclose(rows, 1.0, atol=1e-12)


def test_timed_update_with_flat_observation(params_a, detector_a):
    model = build_mdp(params_a)
    uni = uniformize(with_durations(model, (1.0, 2.0, 1.5)))
    flat = np.full((3, 3, 3), 1.0 / 3.0)
    prior = np.array([0.55, 0.35, 0.1])

    out = timed_belief_update(prior, 0, 1, 0.0, uni, flat)
    np.testing.assert_allclose(np.asarray(out.probs), prior, atol=1e-14)

    # far out in time the chain forgets the prior
    f_long = transition_over_time(uni, 0, 4000.0)
    target = stationary_distribution(f_long)
    out = timed_belief_update(prior, 0, 2, 4000.0, uni, flat)
    np.testing.assert_allclose(np.asarray(out.probs), target, atol=1e-6)

    # two half-steps equal one whole step when nothing is observed
    for tau in (0.8, 3.0, 7.5):
        whole = timed_belief_update(prior, 0, 0, tau, uni, flat)
        half = timed_belief_update(prior, 0, 0, tau / 2, uni, flat)
        twice = timed_belief_update(np.asarray(half.probs), 0, 0, tau / 2,
                                    uni, flat)
        np.testing.assert_allclose(np.asarray(twice.probs),
                                   np.asarray(whole.probs), atol=1e-9)
