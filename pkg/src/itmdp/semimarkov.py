"""Continuous-time extension: semi-Markov evaluation and uniformization.

A semi-Markov model keeps the discrete transition skeleton (the embedded
chain) and adds a mean duration to every transition; costs become rates
per unit time.  Average cost per unit time follows the renewal-reward
ratio over the embedded chain's stationary distribution.

When holding times are exponential and depend only on state and action,
the process can be uniformized: re-expressed on a common clock d_bar
with adjusted transition matrices.  The time-tau transition matrix is
then a Poisson-weighted series of powers of the uniformized matrix,
which is what lets belief updates handle irregularly spaced
observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConvergenceError, DomainError, MultichainError
from .mdp import (
    GenericMdp,
    StationaryPolicy,
    RESIDUAL_TOL,
    _policy_tensors,
    _recurrent_class_counts,
    _stationary_batched,
    validate,
)

DURATION_MATCH_TOL = 1e-12
DEFAULT_MASS_TOL = 1e-12


@dataclass(frozen=True)
class SemiMarkovModel:
    """Embedded chain plus mean transition durations.

    ``embedded.cost`` entries are cost rates per unit time; ``durations``
    holds the mean time each transition takes.  Durations where the
    transition probability is zero are unconstrained and ignored.
    """

    embedded: GenericMdp
    durations: np.ndarray

    def __post_init__(self):
        durations = np.asarray(self.durations, dtype=np.float64)
        if durations.shape != self.embedded.transition.shape:
            raise DomainError(
                [
                    f"durations shape {durations.shape} does not match transition "
                    f"shape {self.embedded.transition.shape}"
                ]
            )
        durations.setflags(write=False)
        object.__setattr__(self, "durations", durations)

    def check(self) -> list[str]:
        out = validate(self.embedded)
        support = self.embedded.transition > 0.0
        bad = support & ~(np.isfinite(self.durations) & (self.durations > 0.0))
        if bad.any():
            u, i, j = np.argwhere(bad)[0]
            out.append(
                f"duration for action {self.embedded.action_labels[u]} transition "
                f"({i} -> {j}) must be finite and positive where the probability is"
            )
        return out


def require_smdp(model: SemiMarkovModel) -> None:
    violations = model.check()
    if violations:
        raise DomainError(violations)


def evaluate_smdp_policy(
    model: SemiMarkovModel, policy: StationaryPolicy | Sequence[int]
) -> float:
    """Long-run average cost per unit time of a stationary policy.

    Renewal-reward over the embedded chain: expected cost accrued per
    transition (rate times duration) against expected duration per
    transition, both weighted by the embedded stationary distribution.
    """
    require_smdp(model)
    mdp = model.embedded
    if not isinstance(policy, StationaryPolicy):
        policy = StationaryPolicy(policy)
    policy.check_against(mdp)

    actions = policy.as_array()[None, :]
    p, _ = _policy_tensors(mdp, actions)
    if _recurrent_class_counts(p)[0] != 1:
        raise MultichainError("policy induces more than one recurrent class")
    pi, residual = _stationary_batched(p)
    if residual[0] > RESIDUAL_TOL:
        raise MultichainError(
            f"stationary solve residual {residual[0]:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )

    rows = np.arange(mdp.n_states)
    d = model.durations[actions[0], rows, :]
    g = mdp.cost[actions[0], rows, :]
    weighted = np.where(p[0] > 0.0, p[0] * d, 0.0)
    total_cost = float(pi[0] @ (weighted * g).sum(axis=1))
    total_time = float(pi[0] @ weighted.sum(axis=1))
    return total_cost / total_time


@dataclass(frozen=True)
class UniformizedModel:
    """Exponential-holding-time chain on a common clock.

    ``d_bar`` is the shortest mean holding time across states and
    actions; ``transition_bar`` the adjusted row-stochastic matrices;
    ``exit_means`` the original per-(action, state) mean holding times.
    """

    d_bar: float
    transition_bar: np.ndarray
    exit_means: np.ndarray

    def __post_init__(self):
        for name in ("transition_bar", "exit_means"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (np.isfinite(self.d_bar) and self.d_bar > 0.0):
            raise DomainError([f"d_bar must be finite and positive, got {self.d_bar!r}"])
        if self.transition_bar.ndim != 3 or self.exit_means.shape != self.transition_bar.shape[:2]:
            raise DomainError(
                [
                    f"transition_bar shape {self.transition_bar.shape} and exit_means "
                    f"shape {self.exit_means.shape} are inconsistent"
                ]
            )

    @property
    def n_states(self) -> int:
        return self.transition_bar.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition_bar.shape[0]


def uniformize(model: SemiMarkovModel) -> UniformizedModel:
    """Uniformize an exponential semi-Markov model.

    Requires durations that depend only on (state, action): within each
    transition row, every positive-probability entry must carry the same
    duration to 1e-12.  The uniformized chain keeps the common clock
    d_bar = min over (state, action) of the holding means; each row
    spreads the leftover clock mass onto the diagonal.
    """
    require_smdp(model)
    p = model.embedded.transition
    m, n, _ = p.shape
    support = p > 0.0

    exit_means = np.empty((m, n))
    for u in range(m):
        for i in range(n):
            values = model.durations[u, i][support[u, i]]
            if values.max() - values.min() > DURATION_MATCH_TOL:
                raise DomainError(
                    [
                        f"durations in action {model.embedded.action_labels[u]} row {i} "
                        f"vary by {values.max() - values.min():.3e}; uniformization "
                        "needs holding times that depend only on state and action"
                    ]
                )
            exit_means[u, i] = values[0]

    d_bar = float(exit_means.min())
    ratio = d_bar / exit_means  # (m, n)
    p_bar = ratio[:, :, None] * p
    p_bar[:, np.arange(n), np.arange(n)] += 1.0 - ratio
    return UniformizedModel(d_bar=d_bar, transition_bar=p_bar, exit_means=exit_means)


def transition_over_time(
    model: UniformizedModel,
    action: int,
    tau: float,
    mass_tol: float = DEFAULT_MASS_TOL,
) -> np.ndarray:
    """Transition matrix over an elapsed time ``tau``.

    Sums the Poisson-weighted series of powers of the uniformized matrix
    with mean ``tau / d_bar``, stopping once the accumulated Poisson mass
    reaches ``1 - mass_tol`` (or, for large means where rounding keeps
    the summed mass just shy of that, once the geometric tail bound
    drops below it) and renormalizing by the included mass, so the rows
    come out stochastic.  ``tau = 0`` returns the exact identity.
    """
    if not 0 <= action < model.n_actions:
        raise DomainError([f"action {action} out of range"])
    if not (math.isfinite(tau) and tau >= 0.0):
        raise DomainError([f"tau must be a finite nonnegative real, got {tau!r}"])
    n = model.n_states
    if tau == 0.0:
        return np.eye(n)

    mean = tau / model.d_bar
    p_bar = model.transition_bar[action]
    log_weight = -mean
    power = np.eye(n)
    weight = math.exp(log_weight)
    total = weight * power
    mass = weight
    log_mean = math.log(mean)
    limit = int(10.0 * mean) + 1000
    for term in range(1, limit + 1):
        log_weight += log_mean - math.log(term)
        power = power @ p_bar
        weight = math.exp(log_weight)
        total += weight * power
        mass += weight
        if mass >= 1.0 - mass_tol:
            return total / mass
        if term + 1 > mean:
            # remaining mass <= weight * r / (1 - r), r = mean / (term + 1)
            ratio = mean / (term + 1)
            if weight * ratio / (1.0 - ratio) <= 0.1 * mass_tol:
                return total / mass
    raise ConvergenceError(
        f"Poisson series did not reach mass {1.0 - mass_tol} in {limit} terms "
        f"(mean {mean:.3e})",
        span=1.0 - mass,
        iterations=limit,
    )


def timed_belief_update(
    belief,
    control: int,
    observation: int,
    tau: float,
    model: UniformizedModel,
    observation_matrices: np.ndarray,
):
    """Belief filter step across an elapsed time ``tau``.

    Identical to the discrete update with the one-stage transition
    matrix replaced by ``transition_over_time(model, control, tau)``.
    """
    from .belief import Belief, _as_belief_array, _normalize_filtered

    q = np.asarray(observation_matrices, dtype=np.float64)
    if q.ndim != 3 or q.shape[0] != model.n_actions or q.shape[1] != model.n_states:
        raise DomainError(
            [f"observation matrices shape {q.shape} does not match the model"]
        )
    b = _as_belief_array(belief)
    if b.shape[0] != model.n_states:
        raise DomainError(
            [f"belief length {b.shape[0]} does not match {model.n_states} states"]
        )
    if not 0 <= control < model.n_actions:
        raise DomainError([f"control {control} out of range"])
    if not 0 <= observation < q.shape[2]:
        raise DomainError([f"observation {observation} out of range"])

    f = transition_over_time(model, control, tau)
    predicted = b @ f
    raw = q[control][:, observation] * predicted
    return _normalize_filtered(raw, f"observation {observation} after {tau} time units")
