"""Imperfect intrusion detection: observation models and belief filtering.

A detector reports one of three symbols each stage (system looks normal,
looks attacked, looks failed) with false-positive and false-negative
error rates, optionally improved right after a defend action.  The true
state is hidden; control decisions see only the belief, the exact
posterior over states given everything observed so far.  That posterior
follows a two-step recursion: push the old belief through the transition
matrix of the last control, weight by the observation likelihood, and
normalize.  All of it is small dense linear algebra; the only numerical
wrinkle is flushing sub-1e-300 components to zero so underflow can't
leave denormal junk in a distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .backend import get_kernels
from .errors import DomainError, ImpossibleObservationError
from .itmodel import ACTION_LABELS, ItParams, build_mdp
from .mdp import GenericMdp, require_valid
from .rng import uniforms
from .simulate import SimConfig, SimResult, draw_initial_states, _reduce

OBS_LOOKS_NORMAL, OBS_LOOKS_ATTACKED, OBS_LOOKS_FAILED = 0, 1, 2
OBS_LABELS = ("N_hat", "A_hat", "F_hat")

BELIEF_FLOOR = 1e-300
_NEG_ROUNDING = 1e-15


@dataclass(frozen=True)
class DetectorParams:
    """Detector error rates.

    ``q_A_given_N`` is the false-positive rate (normal state reported as
    attacked), ``q_N_given_A`` the false-negative rate.  The
    ``*_after_defend`` values, when given, replace the base rates for
    observations made right after a defend action and may only improve
    on them.  ``failure_fidelity`` is the probability that the failed
    state is reported as failed; a misreport shows up as looks-normal.
    """

    q_A_given_N: float
    q_N_given_A: float
    q_A_given_N_after_defend: float | None = None
    q_N_given_A_after_defend: float | None = None
    failure_fidelity: float = 1.0

    def resolved_after_defend(self) -> tuple[float, float]:
        fp = self.q_A_given_N_after_defend
        fn = self.q_N_given_A_after_defend
        return (
            self.q_A_given_N if fp is None else fp,
            self.q_N_given_A if fn is None else fn,
        )


def validate_detector(detector: DetectorParams) -> list[str]:
    out = []
    base = {
        "q_A_given_N": detector.q_A_given_N,
        "q_N_given_A": detector.q_N_given_A,
        "failure_fidelity": detector.failure_fidelity,
    }
    for name, value in base.items():
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            out.append(f"{name} must lie in [0, 1], got {value!r}")
    fp, fn = detector.resolved_after_defend()
    for name, value, cap in (
        ("q_A_given_N_after_defend", fp, detector.q_A_given_N),
        ("q_N_given_A_after_defend", fn, detector.q_N_given_A),
    ):
        if not (math.isfinite(value) and 0.0 <= value <= 1.0):
            out.append(f"{name} must lie in [0, 1], got {value!r}")
        elif value > cap:
            out.append(f"{name} must not exceed the base rate, got {value!r} > {cap!r}")
    return out


def require_detector(detector: DetectorParams) -> None:
    violations = validate_detector(detector)
    if violations:
        raise DomainError(violations)


def observation_matrices(detector: DetectorParams) -> np.ndarray:
    """Per-action observation matrices for the three-state model.

    Shape (3 actions, 3 states, 3 symbols).  Wait and reset use the base
    error rates; defend uses the improved ones.  The failed state is
    reported as failed with probability ``failure_fidelity`` and as
    looks-normal otherwise.
    """
    require_detector(detector)
    fp, fn = detector.q_A_given_N, detector.q_N_given_A
    fp_d, fn_d = detector.resolved_after_defend()
    fid = detector.failure_fidelity

    def block(false_pos, false_neg):
        return [
            [1.0 - false_pos, false_pos, 0.0],
            [false_neg, 1.0 - false_neg, 0.0],
            [1.0 - fid, 0.0, fid],
        ]

    return np.array([block(fp, fn), block(fp_d, fn_d), block(fp, fn)])


def build_observed_mdp(params: ItParams, detector: DetectorParams) -> GenericMdp:
    """The intrusion model with the detector's observation matrices attached."""
    base = build_mdp(params)
    return GenericMdp(
        transition=base.transition,
        cost=base.cost,
        state_labels=base.state_labels,
        action_labels=base.action_labels,
        observation=observation_matrices(detector),
        cost_maintenance=base.cost_maintenance,
    )


@dataclass(frozen=True)
class Belief:
    """A distribution over hidden states.

    Entries in [0, 1] summing to 1 within 1e-12; negative rounding crumbs
    above -1e-15 are clamped to zero on construction.
    """

    probs: np.ndarray

    def __init__(self, probs):
        arr = np.asarray(probs, dtype=np.float64).copy()
        if arr.ndim != 1:
            raise DomainError([f"belief must be a vector, got shape {arr.shape}"])
        if np.any(arr < -_NEG_ROUNDING) or np.any(arr > 1.0 + _NEG_ROUNDING):
            raise DomainError(["belief entries must lie in [0, 1]"])
        arr[arr < 0.0] = 0.0
        if abs(float(arr.sum()) - 1.0) > 1e-12:
            raise DomainError([f"belief must sum to 1, got {float(arr.sum())!r}"])
        arr.setflags(write=False)
        object.__setattr__(self, "probs", arr)

    def __getitem__(self, i: int) -> float:
        return float(self.probs[i])

    def __len__(self) -> int:
        return len(self.probs)


def _as_belief_array(belief) -> np.ndarray:
    if isinstance(belief, Belief):
        return belief.probs
    return Belief(belief).probs


def _normalize_filtered(raw: np.ndarray, what: str) -> Belief:
    raw = np.where(raw < BELIEF_FLOOR, 0.0, raw)
    total = float(raw.sum())
    if total == 0.0:
        raise ImpossibleObservationError(
            f"{what} has zero likelihood under the model; observation and "
            "model disagree"
        )
    return Belief(raw / total)


def initial_belief(prior, z0: int, obs_matrix_for_initial: np.ndarray) -> Belief:
    """Posterior over the starting state after the very first observation.

    ``obs_matrix_for_initial`` is the (n, o) observation matrix in force
    before any control is issued (the wait-action matrix by convention).
    """
    prior = np.asarray(prior, dtype=np.float64)
    q = np.asarray(obs_matrix_for_initial, dtype=np.float64)
    if prior.ndim != 1 or q.ndim != 2 or q.shape[0] != prior.shape[0]:
        raise DomainError(["prior and observation matrix shapes do not agree"])
    if abs(float(prior.sum()) - 1.0) > 1e-12 or np.any(prior < 0.0):
        raise DomainError(["prior must be a distribution over states"])
    if not 0 <= z0 < q.shape[1]:
        raise DomainError([f"observation index {z0} out of range"])
    return _normalize_filtered(prior * q[:, z0], "initial observation")


def update(belief, control: int, observation: int, model: GenericMdp) -> Belief:
    """One exact filter step: predict under ``control``, weight by the
    likelihood of ``observation``, normalize.

    Raises ImpossibleObservationError when the observation has zero
    probability under the predicted distribution.
    """
    if model.observation is None:
        raise DomainError(["model has no observation matrices"])
    b = _as_belief_array(belief)
    if b.shape[0] != model.n_states:
        raise DomainError(
            [f"belief length {b.shape[0]} does not match {model.n_states} states"]
        )
    if not 0 <= control < model.n_actions:
        raise DomainError([f"control {control} out of range"])
    if not 0 <= observation < model.observation.shape[2]:
        raise DomainError([f"observation {observation} out of range"])
    predicted = b @ model.transition[control]
    raw = model.observation[control][:, observation] * predicted
    return _normalize_filtered(raw, f"observation {observation} after control {control}")


@dataclass(frozen=True)
class ThresholdPolicy:
    """Act on belief mass: reset when the failure mass is high enough,
    otherwise defend when the attack mass is, otherwise wait."""

    defend_on_attack_mass: float
    reset_on_failure_mass: float

    def __post_init__(self):
        for name in ("defend_on_attack_mass", "reset_on_failure_mass"):
            value = getattr(self, name)
            if not (math.isfinite(value) and 0.0 <= value <= 1.0):
                raise DomainError([f"{name} must lie in [0, 1], got {value!r}"])

    def __call__(self, belief) -> int:
        b = belief.probs if isinstance(belief, Belief) else np.asarray(belief)
        if b[2] >= self.reset_on_failure_mass:
            return 2
        if b[1] >= self.defend_on_attack_mass:
            return 1
        return 0


def threshold_policy(belief, thresholds: ThresholdPolicy) -> int:
    """Action index the threshold rule picks for this belief."""
    return thresholds(belief)


def _initial_observations(model: GenericMdp, config: SimConfig):
    """Draw starting states, the first observation, and its posterior."""
    x0, states, prior = draw_initial_states(config, model.n_states)
    q0 = model.observation[0]
    states, v = uniforms(states)
    cum = np.cumsum(q0, axis=1)[x0]
    z0 = (cum[:, :-1] <= v[:, None]).sum(axis=1, dtype=np.int64)
    raw = prior[None, :] * q0[:, z0].T
    raw = np.where(raw < BELIEF_FLOOR, 0.0, raw)
    totals = raw.sum(axis=1)
    b0 = raw / totals[:, None]
    return x0, z0, b0, states


def simulate_pomdp(
    model: GenericMdp,
    detector: DetectorParams | None,
    policy,
    config: SimConfig,
    backend: str | None = None,
) -> SimResult:
    """Monte Carlo run where actions see only the belief.

    The hidden state evolves per the model; observations are drawn from
    the detector each stage; the belief follows the exact recursion and
    the policy maps belief to action.  ``policy`` is a ThresholdPolicy
    (fast path, kernel-backed) or any callable from belief vector to
    action index (pure-Python stage loop, same draws, slower).  The
    first observation is drawn before any control using the wait-action
    matrix, and the belief starts from its posterior against the initial
    distribution.

    Pass ``detector=None`` to use observation matrices already attached
    to the model.
    """
    if detector is not None:
        if model.n_states != 3:
            raise DomainError(["detector-based observation models need the 3-state model"])
        model = GenericMdp(
            transition=model.transition,
            cost=model.cost,
            state_labels=model.state_labels,
            action_labels=model.action_labels,
            observation=observation_matrices(detector),
            cost_maintenance=model.cost_maintenance,
        )
    require_valid(model)
    if model.observation is None:
        raise DomainError(["simulate_pomdp needs observation matrices"])
    config.check(model.n_states)

    cost_m = model.cost_maintenance
    has_split = cost_m is not None
    if cost_m is None:
        cost_m = np.zeros_like(model.cost)
    x0, z0, b0, states = _initial_observations(model, config)

    if isinstance(policy, ThresholdPolicy):
        if model.n_states != 3:
            raise DomainError(["the threshold rule is defined for the 3-state model"])
        kernels = get_kernels(backend)
        cost_sum, maint_sum, occupancy, dead_end = kernels.run_pomdp_threshold(
            model.transition,
            model.cost,
            cost_m,
            model.observation,
            x0,
            b0,
            states,
            config.stages,
            config.burn_in,
            policy.defend_on_attack_mass,
            policy.reset_on_failure_mass,
        )
    elif callable(policy):
        cost_sum, maint_sum, occupancy, dead_end = _pomdp_python(
            model.transition, model.cost, cost_m, model.observation,
            x0, b0, states, config.stages, config.burn_in, policy,
        )
    else:
        raise DomainError(["policy must be a ThresholdPolicy or a callable on beliefs"])

    if dead_end.any():
        raise ImpossibleObservationError(
            "a simulated observation had zero likelihood; the model and its "
            "observation matrices are inconsistent"
        )
    horizon = config.stages - config.burn_in
    return _reduce(model, config, horizon, cost_sum, maint_sum, occupancy, has_split)


def _pomdp_python(p, cost, cost_m, obs, x0, b0, rng_states, stages, burn_in, act):
    """Reference stage loop for arbitrary belief-to-action callables.

    Matches the kernel draw order exactly (transition uniform first,
    then observation uniform) so a callable that reproduces the
    threshold rule reproduces the kernel's trajectories.
    """
    n = p.shape[1]
    traj = x0.shape[0]
    cost_sum = np.zeros(traj)
    maint_sum = np.zeros(traj)
    occupancy = np.zeros((traj, n), dtype=np.int64)
    dead_end = np.zeros(traj, dtype=np.uint8)

    for t in range(traj):
        state = rng_states[t : t + 1].copy()
        s = int(x0[t])
        b = b0[t].copy()
        for k in range(stages):
            u = int(act(b))
            if not 0 <= u < p.shape[0]:
                raise DomainError([f"policy returned action {u}, out of range"])
            state, v1 = uniforms(state)
            row = np.cumsum(p[u, s])
            nxt = int((row[: n - 1] <= v1[0]).sum())
            if k >= burn_in:
                cost_sum[t] += cost[u, s, nxt]
                maint_sum[t] += cost_m[u, s, nxt]
                occupancy[t, s] += 1
            state, v2 = uniforms(state)
            qrow = np.cumsum(obs[u, nxt])
            z = int((qrow[:-1] <= v2[0]).sum())

            b = _filter_step_ordered(b, p[u], obs[u][:, z], n)
            if b is None:
                dead_end[t] = 1
                b = np.full(n, 1.0 / n)
            s = nxt
    return cost_sum, maint_sum, occupancy, dead_end


def _filter_step_ordered(b, p_u, likelihood, n):
    """Filter step with the kernels' exact floating-point order; returns
    None on a zero normalizer instead of raising."""
    predicted = b[0] * p_u[0, :]
    for j in range(1, n):
        predicted = predicted + b[j] * p_u[j, :]
    raw = likelihood * predicted
    raw = np.where(raw < BELIEF_FLOOR, 0.0, raw)
    total = raw[0]
    for j in range(1, n):
        total = total + raw[j]
    if total == 0.0:
        return None
    return raw / total


@dataclass(frozen=True)
class TraceRow:
    """One stage of a belief trace: the posterior in force at that
    stage, the action chosen from it, and the observation folded in."""

    stage: int
    belief: tuple[float, ...]
    action: int
    observation: int


def pomdp_trace(
    model: GenericMdp,
    detector: DetectorParams | None,
    policy,
    config: SimConfig,
) -> list[TraceRow]:
    """Single-trajectory belief trace (trajectory index 0 of the seed).

    Row ``k`` records the belief after incorporating observation ``z_k``,
    the action chosen from that belief, and ``z_k`` itself.  The draws
    match ``simulate_pomdp`` trajectory 0 exactly.
    """
    if detector is not None:
        model = GenericMdp(
            transition=model.transition,
            cost=model.cost,
            state_labels=model.state_labels,
            action_labels=model.action_labels,
            observation=observation_matrices(detector),
            cost_maintenance=model.cost_maintenance,
        )
    require_valid(model)
    if model.observation is None:
        raise DomainError(["pomdp_trace needs observation matrices"])
    config.check(model.n_states)
    act = policy if callable(policy) else None
    if act is None:
        raise DomainError(["policy must be callable on beliefs"])

    one = SimConfig(
        stages=config.stages,
        trajectories=1,
        seed=config.seed,
        burn_in=config.burn_in,
        initial_state=config.initial_state,
    )
    x0, z0, b0, states = _initial_observations(model, one)
    p, obs = model.transition, model.observation
    n = model.n_states
    s = int(x0[0])
    b = b0[0].copy()
    z = int(z0[0])
    state = states[0:1].copy()

    rows: list[TraceRow] = []
    for k in range(config.stages):
        u = int(act(b))
        if not 0 <= u < model.n_actions:
            raise DomainError([f"policy returned action {u}, out of range"])
        rows.append(TraceRow(stage=k, belief=tuple(float(x) for x in b), action=u, observation=z))
        state, v1 = uniforms(state)
        row = np.cumsum(p[u, s])
        s = int((row[: n - 1] <= v1[0]).sum())
        state, v2 = uniforms(state)
        qrow = np.cumsum(obs[u, s])
        z = int((qrow[:-1] <= v2[0]).sum())
        b = _filter_step_ordered(b, p[u], obs[u][:, z], n)
        if b is None:
            raise ImpossibleObservationError(
                "a simulated observation had zero likelihood; the model and "
                "its observation matrices are inconsistent"
            )
    return rows
