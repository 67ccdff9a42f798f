"""Generic finite average-cost MDPs: validation, exact policy evaluation,
relative value iteration, and exhaustive policy enumeration.

The model is the flat matrix form: ``m`` transition matrices (one per
action), ``m`` cost matrices, and optionally ``m`` observation matrices.
Everything here is exact linear algebra on small dense arrays; the Monte
Carlo machinery lives in :mod:`itmdp.simulate`.

Conventions fixed across the package:

* ``transition[u, i, j]`` is the probability of moving from state ``i``
  to state ``j`` under action ``u``; rows sum to one.
* ``cost[u, i, j]`` is the cost charged when that transition occurs.
* The gain/bias system is solved with the bias pinned to zero at
  reference state 0; the average cost ("gain") is reference-independent.
* Costs may optionally be split into a maintenance channel and a failure
  channel.  The split is an input annotation, never inferred.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, ConvergenceError, MultichainError

ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-8
TIE_TOL = 1e-12
ENUMERATION_LIMIT = 10**6
_RVI_DAMPING = 0.9  # aperiodicity transform weight; gain is unaffected


def _as_matrix_stack(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim != 3:
        raise DomainError([f"{name} must be a stack of matrices, got shape {arr.shape}"])
    return arr


@dataclass(frozen=True)
class GenericMdp:
    """Finite-state, finite-action average-cost MDP in matrix form.

    Parameters
    ----------
    transition : array_like, shape (m, n, n)
        Row-stochastic transition matrices, one per action.
    cost : array_like, shape (m, n, n)
        Nonnegative per-transition costs.
    state_labels, action_labels : sequence of str, optional
        Display names; generated as ``s0..`` / ``a0..`` when omitted.
    observation : array_like, shape (m, n, o), optional
        Row-stochastic observation matrices ``q[u, i, z]``: probability of
        observing symbol ``z`` when the state is ``i`` and the most recent
        control was ``u``.
    cost_maintenance : array_like, shape (m, n, n), optional
        Maintenance component of ``cost``; the failure component is the
        remainder.  Supplying it enables the two-channel decomposition of
        every evaluation.
    """

    transition: np.ndarray
    cost: np.ndarray
    state_labels: tuple[str, ...] = ()
    action_labels: tuple[str, ...] = ()
    observation: np.ndarray | None = None
    cost_maintenance: np.ndarray | None = None

    def __post_init__(self):
        transition = _as_matrix_stack(self.transition, "transition")
        cost = _as_matrix_stack(self.cost, "cost")
        m, n, n2 = transition.shape
        problems = []
        if n != n2:
            problems.append(f"transition matrices must be square, got {n}x{n2}")
        if cost.shape != transition.shape:
            problems.append(
                f"cost shape {cost.shape} does not match transition shape {transition.shape}"
            )
        observation = self.observation
        if observation is not None:
            observation = _as_matrix_stack(observation, "observation")
            if observation.shape[:2] != (m, n):
                problems.append(
                    f"observation shape {observation.shape} does not match (m, n) = ({m}, {n})"
                )
        maintenance = self.cost_maintenance
        if maintenance is not None:
            maintenance = _as_matrix_stack(maintenance, "cost_maintenance")
            if maintenance.shape != cost.shape:
                problems.append(
                    f"cost_maintenance shape {maintenance.shape} does not match cost shape"
                )
        if problems:
            raise DomainError(problems)

        state_labels = tuple(self.state_labels) or tuple(f"s{i}" for i in range(n))
        action_labels = tuple(self.action_labels) or tuple(f"a{u}" for u in range(m))
        if len(state_labels) != n:
            raise DomainError([f"expected {n} state labels, got {len(state_labels)}"])
        if len(action_labels) != m:
            raise DomainError([f"expected {m} action labels, got {len(action_labels)}"])

        for arr in (transition, cost, observation, maintenance):
            if arr is not None:
                arr.setflags(write=False)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "observation", observation)
        object.__setattr__(self, "cost_maintenance", maintenance)
        object.__setattr__(self, "state_labels", state_labels)
        object.__setattr__(self, "action_labels", action_labels)

    @property
    def n_states(self) -> int:
        return self.transition.shape[1]

    @property
    def n_actions(self) -> int:
        return self.transition.shape[0]

    @property
    def n_observations(self) -> int | None:
        return None if self.observation is None else self.observation.shape[2]

    def cost_failure(self) -> np.ndarray | None:
        """Failure-channel component of the cost, if a split is attached."""
        if self.cost_maintenance is None:
            return None
        return self.cost - self.cost_maintenance


@dataclass(frozen=True)
class StationaryPolicy:
    """A stage-invariant map from state index to action index."""

    action_of_state: tuple[int, ...]

    def __init__(self, actions: Iterable[int]):
        object.__setattr__(self, "action_of_state", tuple(int(a) for a in actions))

    def __len__(self) -> int:
        return len(self.action_of_state)

    def __iter__(self):
        return iter(self.action_of_state)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.action_of_state, dtype=np.int64)

    def check_against(self, model: GenericMdp) -> None:
        if len(self.action_of_state) != model.n_states:
            raise DomainError(
                [f"policy has {len(self.action_of_state)} entries for {model.n_states} states"]
            )
        for i, a in enumerate(self.action_of_state):
            if not 0 <= a < model.n_actions:
                raise DomainError([f"policy action {a} at state {i} is out of range"])

    def describe(self, model: GenericMdp) -> str:
        return ", ".join(
            f"{s}->{model.action_labels[a]}"
            for s, a in zip(model.state_labels, self.action_of_state)
        )


@dataclass(frozen=True)
class PolicyEvaluation:
    """Exact evaluation of one stationary policy on a unichain model."""

    gain: float
    bias: np.ndarray
    stationary_dist: np.ndarray
    gain_maintenance: float | None = None
    gain_failure: float | None = None

    def __post_init__(self):
        self.bias.setflags(write=False)
        self.stationary_dist.setflags(write=False)


@dataclass(frozen=True)
class RviResult:
    """Outcome of relative value iteration."""

    gain: float
    policy: StationaryPolicy
    bias: np.ndarray
    iterations: int
    span: float
    greedy_actions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        self.bias.setflags(write=False)


@dataclass(frozen=True)
class RankedPolicy:
    """One row of the exhaustive enumeration: a policy and its value."""

    policy: StationaryPolicy
    evaluation: PolicyEvaluation | None
    multichain: bool = False

    @property
    def gain(self) -> float:
        return np.inf if self.evaluation is None else self.evaluation.gain


def validate(model: GenericMdp) -> list[str]:
    """Check every model invariant; return one message per violation.

    An empty list means the model is valid.  Nothing is repaired: a row
    that sums to 0.9 is reported, never renormalized.
    """
    out: list[str] = []
    p, g = model.transition, model.cost
    for u in range(model.n_actions):
        label = model.action_labels[u]
        for i in range(model.n_states):
            row = p[u, i]
            if not np.all(np.isfinite(row)):
                out.append(f"transition action {label} row {i}: non-finite entry")
                continue
            dev = abs(float(row.sum()) - 1.0)
            if dev > ROW_SUM_TOL:
                out.append(
                    f"transition action {label} row {i}: sum deviates from 1 by {dev:.3e}"
                )
            if np.any(row < 0.0) or np.any(row > 1.0):
                out.append(f"transition action {label} row {i}: entry outside [0, 1]")
    if not np.all(np.isfinite(g)):
        out.append("cost contains non-finite entries")
    elif np.any(g < 0.0):
        bad = np.argwhere(g < 0.0)[0]
        out.append(
            f"cost action {model.action_labels[bad[0]]} entry ({bad[1]}, {bad[2]}) is negative"
        )
    if model.cost_maintenance is not None:
        gm = model.cost_maintenance
        if not np.all(np.isfinite(gm)):
            out.append("cost_maintenance contains non-finite entries")
        elif np.any(gm < -ROW_SUM_TOL) or np.any(gm - g > ROW_SUM_TOL):
            out.append("cost_maintenance must stay within [0, cost] per entry")
    q = model.observation
    if q is not None:
        for u in range(model.n_actions):
            label = model.action_labels[u]
            for i in range(model.n_states):
                row = q[u, i]
                dev = abs(float(row.sum()) - 1.0)
                if dev > ROW_SUM_TOL:
                    out.append(
                        f"observation action {label} row {i}: sum deviates from 1 by {dev:.3e}"
                    )
                if np.any(row < 0.0) or np.any(row > 1.0):
                    out.append(f"observation action {label} row {i}: entry outside [0, 1]")
    return out


def require_valid(model: GenericMdp) -> None:
    violations = validate(model)
    if violations:
        raise DomainError(violations)


# ---------------------------------------------------------------------------
# batched linear-algebra helpers (shared by evaluate_policy and enumeration)


def _policy_tensors(model: GenericMdp, policies: np.ndarray):
    """Gather per-policy transition and expected-cost tensors.

    ``policies`` has shape (k, n); returns ``p`` of shape (k, n, n) and
    ``gbar`` of shape (k, n) with ``gbar[t, i]`` the expected stage cost.
    """
    n = model.n_states
    rows = np.arange(n)[None, :]
    p = model.transition[policies, rows, :]
    g = model.cost[policies, rows, :]
    return p, (p * g).sum(axis=2)


def _recurrent_class_counts(p: np.ndarray) -> np.ndarray:
    """Number of recurrent classes for each chain in a (k, n, n) stack.

    Reachability is computed on the transition-support graph by boolean
    matrix squaring; a state is recurrent when everything it reaches can
    reach it back, and classes are counted through their lowest-indexed
    member.
    """
    k, n, _ = p.shape
    reach = (p > 0.0) | np.eye(n, dtype=bool)
    steps = max(1, int(np.ceil(np.log2(n))) if n > 1 else 1)
    for _ in range(steps):
        reach = np.matmul(reach.astype(np.uint8), reach.astype(np.uint8)) > 0
    mutual = reach & reach.transpose(0, 2, 1)
    recurrent = ~np.any(reach & ~reach.transpose(0, 2, 1), axis=2)  # (k, n)
    lower = np.tril(np.ones((n, n), dtype=bool), -1)
    partner_below = np.any(mutual & recurrent[:, None, :] & lower[None, :, :], axis=2)
    representative = recurrent & ~partner_below
    return representative.sum(axis=1)


def _gain_bias_batched(p: np.ndarray, gbar: np.ndarray):
    """Solve the gain/bias system for each chain in the stack.

    Unknowns are (gain, h(1), ..., h(n-1)) with h(0) = 0.  Returns
    ``(gain, bias, residual)`` where residual is the max-abs defect of
    the linear system, used to catch numerically multichain inputs.
    """
    k, n, _ = p.shape
    a = np.zeros((k, n, n))
    a[:, :, 0] = 1.0
    eye = np.eye(n)
    a[:, :, 1:] = (eye - p)[:, :, 1:]
    x = np.linalg.solve(a, gbar[:, :, None])[:, :, 0]
    residual = np.abs(np.einsum("kij,kj->ki", a, x) - gbar).max(axis=1)
    gain = x[:, 0]
    bias = np.zeros((k, n))
    bias[:, 1:] = x[:, 1:]
    return gain, bias, residual


def _stationary_batched(p: np.ndarray):
    """Stationary distribution of each unichain transition matrix."""
    k, n, _ = p.shape
    m = p.transpose(0, 2, 1) - np.eye(n)
    m[:, n - 1, :] = 1.0
    rhs = np.zeros((k, n))
    rhs[:, n - 1] = 1.0
    pi = np.linalg.solve(m, rhs[:, :, None])[:, :, 0]
    residual = np.abs(np.einsum("ki,kij->kj", pi, p) - pi).max(axis=1)
    pi = np.where(pi < 0.0, 0.0, pi)
    return pi, residual


def stationary_distribution(transition_matrix: np.ndarray) -> np.ndarray:
    """Stationary distribution of a single unichain row-stochastic matrix."""
    p = np.asarray(transition_matrix, dtype=np.float64)
    if _recurrent_class_counts(p[None])[0] != 1:
        raise MultichainError("matrix has more than one recurrent class")
    pi, residual = _stationary_batched(p[None])
    if residual[0] > RESIDUAL_TOL:
        raise MultichainError(
            f"stationary solve residual {residual[0]:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    return pi[0]


def resolve_cost_split(model: GenericMdp, cost_channel=None):
    """Normalize channel annotations to a (maintenance, failure) matrix pair.

    ``cost_channel`` may be None (use the model's attached split when
    present), a float array giving the maintenance component per entry,
    or an array of "M"/"F" tags assigning whole entries to one channel.
    Returns None when no split information exists.
    """
    if cost_channel is None:
        if model.cost_maintenance is None:
            return None
        gm = model.cost_maintenance
        return gm, model.cost - gm
    arr = np.asarray(cost_channel)
    if arr.shape != model.cost.shape:
        raise DomainError(
            [f"cost_channel shape {arr.shape} does not match cost shape {model.cost.shape}"]
        )
    if arr.dtype.kind in ("U", "S", "O"):
        tags = np.char.upper(arr.astype(str))
        if not np.all((tags == "M") | (tags == "F")):
            raise DomainError(["cost_channel tags must be 'M' or 'F'"])
        gm = np.where(tags == "M", model.cost, 0.0)
    else:
        gm = arr.astype(np.float64)
        if np.any(gm < -ROW_SUM_TOL) or np.any(gm - model.cost > ROW_SUM_TOL):
            raise DomainError(["maintenance component must stay within [0, cost] per entry"])
    return gm, model.cost - gm


def evaluate_policy(
    model: GenericMdp,
    policy: StationaryPolicy | Sequence[int],
    cost_channel=None,
) -> PolicyEvaluation:
    """Exactly evaluate a stationary policy on a unichain model.

    Solves the linear system ``gain + h(i) = gbar(i) + sum_j p[i,j] h(j)``
    with ``h(0) = 0`` and also returns the stationary distribution.  When
    a maintenance/failure split is available (attached to the model or
    passed via ``cost_channel``) the gain is decomposed by accumulating
    each channel's expected stage cost against the stationary weights.

    Raises
    ------
    DomainError
        If the model or policy is structurally invalid.
    MultichainError
        If the induced chain has more than one recurrent class, or the
        linear solves leave a residual above ``1e-8``.
    """
    require_valid(model)
    if not isinstance(policy, StationaryPolicy):
        policy = StationaryPolicy(policy)
    policy.check_against(model)

    actions = policy.as_array()[None, :]
    p, gbar = _policy_tensors(model, actions)
    if _recurrent_class_counts(p)[0] != 1:
        raise MultichainError(
            "policy induces more than one recurrent class; average cost is "
            "initial-state dependent"
        )
    gain, bias, residual = _gain_bias_batched(p, gbar)
    pi, pi_residual = _stationary_batched(p)
    worst = max(float(residual[0]), float(pi_residual[0]))
    if worst > RESIDUAL_TOL:
        raise MultichainError(
            f"linear system residual {worst:.3e} exceeds {RESIDUAL_TOL:.0e}; "
            "chain is numerically multichain"
        )

    gain_m = gain_f = None
    split = resolve_cost_split(model, cost_channel)
    if split is not None:
        gm, gf = split
        rows = np.arange(model.n_states)
        gm_bar = (p[0] * gm[actions[0], rows, :]).sum(axis=1)
        gf_bar = (p[0] * gf[actions[0], rows, :]).sum(axis=1)
        gain_m = float(pi[0] @ gm_bar)
        gain_f = float(pi[0] @ gf_bar)

    return PolicyEvaluation(
        gain=float(gain[0]),
        bias=bias[0].copy(),
        stationary_dist=pi[0].copy(),
        gain_maintenance=gain_m,
        gain_failure=gain_f,
    )


def relative_value_iteration(
    model: GenericMdp,
    tol: float = 1e-10,
    max_iterations: int = 100_000,
    tie_tol: float = 1e-9,
) -> RviResult:
    """Average-cost optimization by relative value iteration.

    Bellman updates are normalized at reference state 0 and iterated
    until the span seminorm of successive bias differences drops below
    ``tol``.  A damping transform (mixing each transition matrix with the
    identity) is applied internally so periodic chains converge; it
    changes neither the optimal gain nor any action ordering.

    Returns the optimal gain, a greedy policy (lowest action index on
    ties), the bias vector, and the per-state sets of actions whose
    Bellman values lie within ``tie_tol`` of the minimum.
    """
    require_valid(model)
    n = model.n_states
    p = model.transition
    gbar = (p * model.cost).sum(axis=2)  # (m, n)
    pt = _RVI_DAMPING * p + (1.0 - _RVI_DAMPING) * np.eye(n)

    h = np.zeros(n)
    span = np.inf
    for iteration in range(1, max_iterations + 1):
        q = gbar + np.einsum("uij,j->ui", pt, h)
        th = q.min(axis=0)
        h_new = th - th[0]
        diff = h_new - h
        span = _RVI_DAMPING * (float(diff.max()) - float(diff.min()))
        h = h_new
        if span < tol:
            break
    else:
        raise ConvergenceError(
            f"relative value iteration did not converge in {max_iterations} "
            f"iterations (span {span:.3e})",
            span=span,
            iterations=max_iterations,
        )

    q = gbar + np.einsum("uij,j->ui", pt, h)
    th = q.min(axis=0)
    greedy = tuple(
        tuple(int(u) for u in np.flatnonzero(q[:, i] - th[i] <= tie_tol)) for i in range(n)
    )
    policy = StationaryPolicy(g[0] for g in greedy)
    return RviResult(
        gain=float(th[0]),
        policy=policy,
        bias=_RVI_DAMPING * h,
        iterations=iteration,
        span=span,
        greedy_actions=greedy,
    )


def enumerate_policies(model: GenericMdp, cost_channel=None) -> list[RankedPolicy]:
    """Evaluate every stationary policy, sorted by gain ascending.

    Policies whose induced chain is multichain are flagged and placed at
    the end instead of being assigned a value.  The order is fully
    deterministic: gain first, then the action tuple as a tiebreaker.
    Refuses models with more than ``10**6`` policies.
    """
    require_valid(model)
    n, m = model.n_states, model.n_actions
    count = m**n
    if count > ENUMERATION_LIMIT:
        raise DomainError(
            [f"{m}^{n} = {count} policies exceeds the enumeration limit of {ENUMERATION_LIMIT}"]
        )

    grids = np.meshgrid(*([np.arange(m)] * n), indexing="ij")
    policies = np.stack([g.ravel() for g in grids], axis=1).astype(np.int64)  # (k, n)
    p, gbar = _policy_tensors(model, policies)
    unichain = _recurrent_class_counts(p) == 1

    gains = np.full(count, np.nan)
    biases = np.zeros((count, n))
    pis = np.zeros((count, n))
    idx = np.flatnonzero(unichain)
    if idx.size:
        gain, bias, residual = _gain_bias_batched(p[idx], gbar[idx])
        pi, pi_residual = _stationary_batched(p[idx])
        bad = np.maximum(residual, pi_residual) > RESIDUAL_TOL
        unichain[idx[bad]] = False
        good = idx[~bad]
        gains[good] = gain[~bad]
        biases[good] = bias[~bad]
        pis[good] = pi[~bad]

    split = resolve_cost_split(model, cost_channel)
    rows = np.arange(n)[None, :]
    if split is not None:
        gm, gf = split
        gm_bar = (p * gm[policies, rows, :]).sum(axis=2)
        gf_bar = (p * gf[policies, rows, :]).sum(axis=2)
        gains_m = np.einsum("ki,ki->k", pis, gm_bar)
        gains_f = np.einsum("ki,ki->k", pis, gf_bar)

    entries: list[RankedPolicy] = []
    for t in range(count):
        policy = StationaryPolicy(policies[t])
        if not unichain[t]:
            entries.append(RankedPolicy(policy=policy, evaluation=None, multichain=True))
            continue
        evaluation = PolicyEvaluation(
            gain=float(gains[t]),
            bias=biases[t].copy(),
            stationary_dist=pis[t].copy(),
            gain_maintenance=float(gains_m[t]) if split is not None else None,
            gain_failure=float(gains_f[t]) if split is not None else None,
        )
        entries.append(RankedPolicy(policy=policy, evaluation=evaluation))

    entries.sort(
        key=lambda e: (e.multichain, e.gain if not e.multichain else 0.0, e.policy.action_of_state)
    )
    return entries


def tie_groups(entries: list[RankedPolicy], tol: float = TIE_TOL) -> list[list[RankedPolicy]]:
    """Group consecutively ranked policies whose gains differ by <= tol."""
    groups: list[list[RankedPolicy]] = []
    for entry in entries:
        if entry.multichain:
            continue
        if groups and entry.gain - groups[-1][0].gain <= tol:
            groups[-1].append(entry)
        else:
            groups.append([entry])
    return groups
