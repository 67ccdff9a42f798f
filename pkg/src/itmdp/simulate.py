"""Seeded Monte Carlo simulation of fixed-policy MDP trajectories.

Trajectory ``i`` draws from an independent random substream derived from
``(seed, i)``, so results are reproducible bit for bit on any machine,
any thread count, and either kernel backend.  Aggregation happens here
in backend-independent code, always in trajectory-index order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backend import get_kernels, resolve_backend
from .errors import DomainError
from .mdp import GenericMdp, StationaryPolicy, require_valid
from .rng import substream_states, uniforms

DEFAULT_STAGE_CAP = 10_000_000


@dataclass(frozen=True)
class SimConfig:
    """Simulation run shape.

    ``initial_state`` is either a state index or a distribution over
    states (one uniform draw per trajectory decides the start).
    ``burn_in`` stages are excluded from cost and occupancy averages.
    """

    stages: int
    trajectories: int
    seed: int
    burn_in: int = 0
    initial_state: int | Sequence[float] = 0

    def check(self, n_states: int) -> None:
        problems = []
        if self.stages <= 0:
            problems.append(f"stages must be positive, got {self.stages}")
        if self.trajectories <= 0:
            problems.append(f"trajectories must be positive, got {self.trajectories}")
        if not 0 <= self.seed < 2**64:
            problems.append("seed must fit in an unsigned 64-bit integer")
        if not 0 <= self.burn_in < max(self.stages, 1):
            problems.append(
                f"burn_in must lie in [0, stages), got {self.burn_in} with stages {self.stages}"
            )
        if np.isscalar(self.initial_state):
            if not 0 <= int(self.initial_state) < n_states:
                problems.append(f"initial_state {self.initial_state} out of range")
        else:
            dist = np.asarray(self.initial_state, dtype=np.float64)
            if dist.shape != (n_states,):
                problems.append(
                    f"initial distribution must have length {n_states}, got shape {dist.shape}"
                )
            elif np.any(dist < 0.0) or abs(float(dist.sum()) - 1.0) > 1e-12:
                problems.append("initial distribution must be nonnegative and sum to 1")
        if problems:
            raise DomainError(problems)


@dataclass(frozen=True)
class FirstPassage:
    """Pooled first-passage statistics from source to target."""

    source: int
    target: int
    mean_stages: float
    std_error: float
    count: int
    censored: int


@dataclass(frozen=True)
class SimResult:
    """Monte Carlo estimates from one simulation run."""

    mean_cost_per_stage: float
    std_error: float
    maintenance_mean: float | None
    failure_mean: float | None
    occupancy: np.ndarray
    stages: int
    trajectories: int
    burn_in: int
    seed: int
    first_passage: FirstPassage | None = None

    def __post_init__(self):
        self.occupancy.setflags(write=False)


def draw_initial_states(config: SimConfig, n_states: int):
    """Per-trajectory starting states and the advanced RNG stream array.

    A fixed starting index consumes no randomness; a distribution
    consumes one uniform per trajectory before the stage loop begins.
    """
    states = substream_states(config.seed, config.trajectories)
    if np.isscalar(config.initial_state):
        x0 = np.full(config.trajectories, int(config.initial_state), dtype=np.int64)
        prior = np.zeros(n_states)
        prior[int(config.initial_state)] = 1.0
    else:
        prior = np.asarray(config.initial_state, dtype=np.float64)
        cum = np.cumsum(prior)
        states, v = uniforms(states)
        x0 = (cum[None, : n_states - 1] <= v[:, None]).sum(axis=1, dtype=np.int64)
    return x0, states, prior


def _maintenance_or_zeros(model: GenericMdp):
    if model.cost_maintenance is not None:
        return model.cost_maintenance, True
    return np.zeros_like(model.cost), False


def _reduce(model, config, horizon, cost_sum, maint_sum, occupancy, has_split, passage=None):
    per_traj = cost_sum / horizon
    mean = float(per_traj.mean())
    if config.trajectories > 1:
        std_error = float(per_traj.std(ddof=1) / math.sqrt(config.trajectories))
    else:
        std_error = 0.0
    maintenance = failure = None
    if has_split:
        maintenance = float((maint_sum / horizon).mean())
        failure = float(((cost_sum - maint_sum) / horizon).mean())
    frequencies = occupancy.sum(axis=0) / float(config.trajectories * horizon)
    return SimResult(
        mean_cost_per_stage=mean,
        std_error=std_error,
        maintenance_mean=maintenance,
        failure_mean=failure,
        occupancy=frequencies,
        stages=config.stages,
        trajectories=config.trajectories,
        burn_in=config.burn_in,
        seed=config.seed,
        first_passage=passage,
    )


def simulate(
    model: GenericMdp,
    policy: StationaryPolicy | Sequence[int],
    config: SimConfig,
    backend: str | None = None,
) -> SimResult:
    """Estimate the long-run average cost of a stationary policy.

    Returns the mean cost per stage over trajectories (standard error
    across trajectory means), per-channel means when the model carries a
    maintenance/failure split, and state occupancy frequencies.
    """
    require_valid(model)
    if not isinstance(policy, StationaryPolicy):
        policy = StationaryPolicy(policy)
    policy.check_against(model)
    config.check(model.n_states)

    cost_m, has_split = _maintenance_or_zeros(model)
    x0, states, _ = draw_initial_states(config, model.n_states)
    kernels = get_kernels(backend)
    cost_sum, maint_sum, occupancy, _, _, _ = kernels.run_mdp(
        model.transition,
        model.cost,
        cost_m,
        policy.as_array(),
        x0,
        states,
        config.stages,
        config.burn_in,
        -1,
        -1,
    )
    horizon = config.stages - config.burn_in
    return _reduce(model, config, horizon, cost_sum, maint_sum, occupancy, has_split)


def first_passage(
    model: GenericMdp,
    policy: StationaryPolicy | Sequence[int],
    source: int,
    target: int,
    config: SimConfig,
    stage_cap: int = DEFAULT_STAGE_CAP,
    backend: str | None = None,
) -> SimResult:
    """Estimate mean first-passage stages from source to target.

    A passage spans from the stage at which the chain enters the source
    state through the stage at which it first enters the target,
    inclusive on both ends.  After each hit the chain restarts at the
    source, so one trajectory contributes many passages.  Trajectories
    that never complete a passage within ``min(stages, stage_cap)``
    stages are censored: counted, excluded from the mean.  Cost and
    occupancy statistics in the result come from the same restarted
    chain; passage tracking ignores burn-in.
    """
    require_valid(model)
    if not isinstance(policy, StationaryPolicy):
        policy = StationaryPolicy(policy)
    policy.check_against(model)
    n = model.n_states
    if not (0 <= source < n and 0 <= target < n):
        raise DomainError([f"source/target must be state indices below {n}"])
    if source == target:
        raise DomainError(["source and target must differ"])
    if stage_cap <= 0:
        raise DomainError([f"stage_cap must be positive, got {stage_cap}"])
    config.check(n)

    horizon_total = min(config.stages, stage_cap)
    run_config = config if horizon_total == config.stages else SimConfig(
        stages=horizon_total,
        trajectories=config.trajectories,
        seed=config.seed,
        burn_in=min(config.burn_in, horizon_total - 1),
        initial_state=config.initial_state,
    )

    cost_m, has_split = _maintenance_or_zeros(model)
    x0, states, _ = draw_initial_states(run_config, n)
    kernels = get_kernels(backend)
    cost_sum, maint_sum, occupancy, fp_count, fp_sum, fp_sumsq = kernels.run_mdp(
        model.transition,
        model.cost,
        cost_m,
        policy.as_array(),
        x0,
        states,
        run_config.stages,
        run_config.burn_in,
        source,
        target,
    )

    hits = int(fp_count.sum())
    censored = int((fp_count == 0).sum())
    if hits > 0:
        total = float(fp_sum.sum())
        mean_stages = total / hits
        if hits > 1:
            variance = max(float(fp_sumsq.sum()) - hits * mean_stages**2, 0.0) / (hits - 1)
            std_error = math.sqrt(variance / hits)
        else:
            std_error = 0.0
    else:
        mean_stages = math.nan
        std_error = math.nan
    passage = FirstPassage(
        source=source,
        target=target,
        mean_stages=mean_stages,
        std_error=std_error,
        count=hits,
        censored=censored,
    )
    horizon = run_config.stages - run_config.burn_in
    return _reduce(model, run_config, horizon, cost_sum, maint_sum, occupancy, has_split, passage)


__all__ = [
    "SimConfig",
    "SimResult",
    "FirstPassage",
    "simulate",
    "first_passage",
    "draw_initial_states",
    "resolve_backend",
    "DEFAULT_STAGE_CAP",
]
