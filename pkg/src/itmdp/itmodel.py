"""The three-state intrusion-tolerance model.

States: 0 = normal operation (N), 1 = under attack (A), 2 = failed (F).
Actions: 0 = wait (W), 1 = defend (D), 2 = reset (R).

Eight scalars parameterize the model: per-stage attack initiation and
completion probabilities ``p_A`` and ``p_F``, defend and reset success
probabilities ``p_D`` and ``p_R``, and per-stage costs ``c_A`` (being
under attack), ``c_D`` (defending), ``c_F`` (being failed), ``c_R``
(resetting).  Only three stationary policies can be optimal, the ones
that differ in the action taken under attack; this module carries their
closed-form average costs, the pairwise comparison inequalities in
polynomial form, reset-reliability sufficiency thresholds, mean time to
failure, the maintenance/failure cost decomposition, and the partition
of normalized cost space into optimality regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from .errors import DomainError
from .mdp import GenericMdp, StationaryPolicy

STATE_NORMAL, STATE_ATTACK, STATE_FAILURE = 0, 1, 2
ACTION_WAIT, ACTION_DEFEND, ACTION_RESET = 0, 1, 2

STATE_LABELS = ("N", "A", "F")
ACTION_LABELS = ("W", "D", "R")

POLICY_WAIT = StationaryPolicy((ACTION_WAIT, ACTION_WAIT, ACTION_RESET))
POLICY_DEFEND = StationaryPolicy((ACTION_WAIT, ACTION_DEFEND, ACTION_RESET))
POLICY_RESET = StationaryPolicy((ACTION_WAIT, ACTION_RESET, ACTION_RESET))

GAIN_TIE_TOL = 1e-12

REGION_WAIT, REGION_DEFEND, REGION_RESET, REGION_TIE, REGION_INVALID = range(5)
REGION_LABELS = ("W", "D", "R", "tie", "invalid")

PLANE_CA_CD = "cA-cD"
PLANE_CR_CD = "cR-cD"
PLANE_3D = "3d"


@dataclass(frozen=True)
class ItParams:
    """The eight model parameters.  Construction does not validate; call
    :func:`validate_params` (or any operation, which does so implicitly)."""

    p_A: float
    p_F: float
    p_D: float
    p_R: float
    c_A: float
    c_D: float
    c_F: float
    c_R: float

    def __post_init__(self):
        for f in fields(self):
            object.__setattr__(self, f.name, float(getattr(self, f.name)))

    def as_dict(self) -> dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def validate_params(params: ItParams) -> list[str]:
    """Check every parameter constraint; return one message per violation."""
    out: list[str] = []
    d = params.as_dict()
    for name, value in d.items():
        if not math.isfinite(value):
            out.append(f"{name} must be finite, got {value!r}")
    if out:
        return out
    if not 0.0 < params.p_A < 1.0:
        out.append(f"p_A must lie strictly between 0 and 1, got {params.p_A!r}")
    if not 0.0 < params.p_F < 1.0:
        out.append(f"p_F must lie strictly between 0 and 1, got {params.p_F!r}")
    if not 0.0 <= params.p_D < 1.0:
        out.append(f"p_D must lie in [0, 1), got {params.p_D!r}")
    if not 0.0 < params.p_R <= 1.0:
        out.append(f"p_R must lie in (0, 1], got {params.p_R!r}")
    if params.c_A < 0.0:
        out.append(f"c_A must be nonnegative, got {params.c_A!r}")
    if params.c_D < 0.0:
        out.append(f"c_D must be nonnegative, got {params.c_D!r}")
    if params.c_F <= 0.0:
        out.append(f"c_F must be positive, got {params.c_F!r}")
    if params.c_R <= 0.0:
        out.append(f"c_R must be positive, got {params.c_R!r}")
    if not params.c_A < params.c_F:
        out.append(
            f"c_A must be strictly less than c_F (a failed stage outweighs an attacked "
            f"stage), got c_A={params.c_A!r}, c_F={params.c_F!r}"
        )
    if not params.c_D < params.c_R:
        out.append(
            f"c_D must be strictly less than c_R (a reset outweighs defending), "
            f"got c_D={params.c_D!r}, c_R={params.c_R!r}"
        )
    if not params.c_R <= params.c_F:
        out.append(
            f"c_R must not exceed c_F (a failed stage covers at least a reset), "
            f"got c_R={params.c_R!r}, c_F={params.c_F!r}"
        )
    return out


def require_params(params: ItParams) -> None:
    violations = validate_params(params)
    if violations:
        raise DomainError(violations)


def build_mdp(params: ItParams) -> GenericMdp:
    """Assemble the three-state model as a generic MDP.

    Costs are split per transition entry into a maintenance channel
    (the c_D and c_R terms: what the operator spends acting) and a
    failure channel (the c_A and c_F terms: what the adversary inflicts).
    The split rides on the returned model so every evaluation decomposes.
    """
    require_params(params)
    p_A, p_F, p_D, p_R = params.p_A, params.p_F, params.p_D, params.p_R
    c_A, c_D, c_F, c_R = params.c_A, params.c_D, params.c_F, params.c_R

    transition = np.array(
        [
            [[1 - p_A, p_A, 0.0], [0.0, 1 - p_F, p_F], [0.0, 0.0, 1.0]],
            [
                [1 - p_A, p_A, 0.0],
                [p_D, (1 - p_D) * (1 - p_F), (1 - p_D) * p_F],
                [0.0, 0.0, 1.0],
            ],
            [[1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [p_R, 0.0, 1 - p_R]],
        ]
    )
    # incident costs: nothing from N, c_A while the attack persists, c_F
    # while failed; leaving a bad state costs nothing through this channel
    failure_base = np.array([[0.0, 0.0, 0.0], [0.0, c_A, c_A], [0.0, 0.0, c_F]])
    surcharge = np.array([0.0, c_D, c_R])
    maintenance = np.broadcast_to(surcharge[:, None, None], (3, 3, 3)).copy()
    cost = failure_base[None, :, :] + maintenance
    return GenericMdp(
        transition=transition,
        cost=cost,
        state_labels=STATE_LABELS,
        action_labels=ACTION_LABELS,
        cost_maintenance=maintenance,
    )


# ---------------------------------------------------------------------------
# closed forms
#
# The helpers below are plain arithmetic so they accept floats or numpy
# arrays alike; the sweep code broadcasts cost grids through them.


def _renewal_terms(p_A, p_F, p_R, c_A, c_F, c_R):
    """Shared numerator/denominator of the wait policy's average cost."""
    cycle_cost = p_A * (p_R * c_A + p_F * (1 - p_R) * c_F + p_F * c_R)
    cycle_weight = p_A * p_F + p_R * (p_A + p_F)
    return cycle_cost, cycle_weight


def _gain_wait(p_A, p_F, p_R, c_A, c_F, c_R):
    cost, weight = _renewal_terms(p_A, p_F, p_R, c_A, c_F, c_R)
    return cost / weight


def _gain_defend(p_A, p_F, p_D, p_R, c_A, c_D, c_F, c_R):
    cost, weight = _renewal_terms(p_A, p_F, p_R, c_A, c_F, c_R)
    weight_d = weight + p_D * (p_R * (1 - p_F) - p_F * p_A)
    return (cost * (1 - p_D) + p_A * p_R * c_D) / weight_d


def _gain_reset(p_A, c_R):
    return p_A * c_R / (1 + p_A)


def lambda_wait(params: ItParams) -> float:
    """Average cost per stage of always waiting under attack."""
    require_params(params)
    return float(
        _gain_wait(params.p_A, params.p_F, params.p_R, params.c_A, params.c_F, params.c_R)
    )


def lambda_defend(params: ItParams) -> float:
    """Average cost per stage of defending under attack."""
    require_params(params)
    return float(
        _gain_defend(
            params.p_A,
            params.p_F,
            params.p_D,
            params.p_R,
            params.c_A,
            params.c_D,
            params.c_F,
            params.c_R,
        )
    )


def lambda_reset(params: ItParams) -> float:
    """Average cost per stage of resetting as soon as an attack is seen."""
    require_params(params)
    return float(_gain_reset(params.p_A, params.c_R))


def _split_wait(p_A, p_F, p_R, c_A, c_F, c_R):
    _, weight = _renewal_terms(p_A, p_F, p_R, c_A, c_F, c_R)
    maintenance = p_A * p_F * c_R / weight
    failure = p_A * (p_R * c_A + p_F * (1 - p_R) * c_F) / weight
    return maintenance, failure


def _split_defend(p_A, p_F, p_D, p_R, c_A, c_D, c_F, c_R):
    _, weight = _renewal_terms(p_A, p_F, p_R, c_A, c_F, c_R)
    weight_d = weight + p_D * (p_R * (1 - p_F) - p_F * p_A)
    maintenance = (p_A * p_R * c_D + (1 - p_D) * p_A * p_F * c_R) / weight_d
    failure = (1 - p_D) * p_A * (p_R * c_A + p_F * (1 - p_R) * c_F) / weight_d
    return maintenance, failure


def mttf_wait(params: ItParams) -> float:
    """Mean stages from entering N to first entering F, waiting policy."""
    require_params(params)
    return 1.0 + 1.0 / params.p_A + 1.0 / params.p_F


def mttf_defend(params: ItParams) -> float:
    """Mean stages from entering N to first entering F, defending policy."""
    require_params(params)
    p_A, p_F, p_D = params.p_A, params.p_F, params.p_D
    return 1.0 + 1.0 / p_A + (p_A + p_D) / (p_A * p_F * (1 - p_D))


def mttf_reset(params: ItParams) -> float:
    """Mean stages to failure under the resetting policy: infinite, since
    resetting on every detected attack never lets the attack complete."""
    require_params(params)
    return math.inf


@dataclass(frozen=True)
class PolicyValue:
    """Average cost of one candidate policy with its channel split."""

    gain: float
    maintenance: float
    failure: float
    mttf: float


@dataclass(frozen=True)
class PolicyTriple:
    """The three candidate policies evaluated side by side.

    ``optimal`` is the set of labels tied for the minimum within 1e-12;
    ``recommended`` breaks any tie by the fixed precedence W, D, R.
    ``cycle_cost`` and ``cycle_weight`` are the shared numerator and
    denominator reused by the wait and defend closed forms, retained for
    inspection.
    """

    lambda_wait: float
    lambda_defend: float
    lambda_reset: float
    optimal: tuple[str, ...]
    recommended: str
    wait: PolicyValue
    defend: PolicyValue
    reset: PolicyValue
    cycle_cost: float
    cycle_weight: float


def evaluate_triple(params: ItParams) -> PolicyTriple:
    """Closed-form evaluation of the three candidate policies."""
    require_params(params)
    p = params
    gain_w = _gain_wait(p.p_A, p.p_F, p.p_R, p.c_A, p.c_F, p.c_R)
    gain_d = _gain_defend(p.p_A, p.p_F, p.p_D, p.p_R, p.c_A, p.c_D, p.c_F, p.c_R)
    gain_r = _gain_reset(p.p_A, p.c_R)
    m_w, f_w = _split_wait(p.p_A, p.p_F, p.p_R, p.c_A, p.c_F, p.c_R)
    m_d, f_d = _split_defend(p.p_A, p.p_F, p.p_D, p.p_R, p.c_A, p.c_D, p.c_F, p.c_R)
    cycle_cost, cycle_weight = _renewal_terms(p.p_A, p.p_F, p.p_R, p.c_A, p.c_F, p.c_R)

    gains = {"W": gain_w, "D": gain_d, "R": gain_r}
    best = min(gains.values())
    tied = tuple(label for label in ACTION_LABELS if gains[label] - best <= GAIN_TIE_TOL)
    return PolicyTriple(
        lambda_wait=float(gain_w),
        lambda_defend=float(gain_d),
        lambda_reset=float(gain_r),
        optimal=tied,
        recommended=tied[0],
        wait=PolicyValue(float(gain_w), float(m_w), float(f_w), mttf_wait(params)),
        defend=PolicyValue(float(gain_d), float(m_d), float(f_d), mttf_defend(params)),
        reset=PolicyValue(float(gain_r), float(gain_r), 0.0, math.inf),
        cycle_cost=float(cycle_cost),
        cycle_weight=float(cycle_weight),
    )


# ---------------------------------------------------------------------------
# pairwise comparisons in polynomial form
#
# Each inequality between two average costs clears denominators into a
# polynomial comparison; the margin below is (right side - left side) of
# that polynomial form, so a positive margin means the inequality holds
# and the magnitude is boundary distance in polynomial units, not in
# cost-per-stage units.


def _margin_wait_reset(p_A, p_F, p_R, c_A, c_F, c_R):
    lhs = (1 + p_A) * (p_R * c_A + p_F * (1 - p_R) * c_F)
    rhs = (p_R * (p_A + p_F) - p_F) * c_R
    return rhs - lhs


def _margin_wait_defend(p_A, p_F, p_D, p_R, c_A, c_D, c_F, c_R):
    lhs = (1 + p_A) * p_D * (p_R * c_A + p_F * (1 - p_R) * c_F + p_F * c_R)
    rhs = (p_A * p_F + p_R * (p_A + p_F)) * c_D
    return rhs - lhs


def _margin_defend_reset(p_A, p_F, p_D, p_R, c_A, c_D, c_F, c_R):
    lhs = (1 + p_A) * ((1 - p_D) * (p_R * c_A + p_F * (1 - p_R) * c_F) + p_R * c_D)
    rhs = (p_R * (p_A + p_D) - p_F * (1 - p_D) * (1 - p_R)) * c_R
    return rhs - lhs


@dataclass(frozen=True)
class PolicyComparison:
    """The three pairwise inequalities, each with its polynomial margin.

    A margin is positive exactly when the corresponding strict
    inequality holds; zero means the parameters sit on the boundary.
    """

    wait_below_defend: bool
    wait_below_reset: bool
    defend_below_reset: bool
    margin_wait_defend: float
    margin_wait_reset: float
    margin_defend_reset: float


def compare(params: ItParams) -> PolicyComparison:
    """Evaluate the three pairwise average-cost comparisons."""
    require_params(params)
    p = params
    m_wd = _margin_wait_defend(p.p_A, p.p_F, p.p_D, p.p_R, p.c_A, p.c_D, p.c_F, p.c_R)
    m_wr = _margin_wait_reset(p.p_A, p.p_F, p.p_R, p.c_A, p.c_F, p.c_R)
    m_dr = _margin_defend_reset(p.p_A, p.p_F, p.p_D, p.p_R, p.c_A, p.c_D, p.c_F, p.c_R)
    return PolicyComparison(
        wait_below_defend=m_wd > 0.0,
        wait_below_reset=m_wr > 0.0,
        defend_below_reset=m_dr > 0.0,
        margin_wait_defend=float(m_wd),
        margin_wait_reset=float(m_wr),
        margin_defend_reset=float(m_dr),
    )


# ---------------------------------------------------------------------------
# sufficiency of the reset action


def basic_weak_bound(p_A: float, p_F: float, p_D: float) -> float:
    """Reset reliability below which resetting beats both alternatives
    regardless of costs (the defend action taken into account)."""
    top = p_F * (1 - p_D)
    return top / (top + p_A + p_D)


def basic_strong_bound(p_A: float, p_F: float) -> float:
    """Reset reliability below which resetting beats waiting regardless
    of costs."""
    return p_F / (p_F + p_A)


def refined_weak_bound(p_A: float, p_F: float, p_D: float) -> float:
    """Weak bound tightened by restricting costs to the admissible region."""
    top = p_F * (2 + p_A) * (1 - p_D)
    return top / (top + p_A + p_D)


def refined_strong_bound(p_A: float, p_F: float) -> float:
    """Strong bound tightened the same way."""
    top = p_F * (2 + p_A)
    return top / (top + p_A)


@dataclass(frozen=True)
class SufficiencyClass:
    """Reset-reliability classification with all four threshold values.

    ``category`` reflects the requested mode (basic or refined bounds):
    "insufficient" when p_R is at or below the weak bound, "weak" when
    between the bounds, "strong" above the strong bound.  The three
    ``*_exceeds_one`` flags report dismissal conditions of the refined
    partition geometry; ``z2_threshold`` is the reset reliability above
    which the z2 boundary quantity exceeds one (infinite when it never
    does).  ``defend_effectiveness`` buckets p_D against the cutoffs
    1/(2+p_A) and 1/2.
    """

    category: str
    refined: bool
    basic_weak: float
    basic_strong: float
    refined_weak: float
    refined_strong: float
    x1_exceeds_one: bool
    x2_exceeds_one: bool
    z2_exceeds_one: bool
    z2_threshold: float
    defend_effectiveness: str


def _dismissal_flags(p_A: float, p_F: float, p_D: float, p_R: float):
    """The x1/x2/z2 unit-interval tests in cleared-denominator form."""
    x1_exceeds = p_R <= refined_weak_bound(p_A, p_F, p_D)
    x2_exceeds = p_R <= refined_strong_bound(p_A, p_F)
    scaled = p_F * (2 + p_A) * (1 - p_D)
    kicker = p_D * (2 + p_A) - 1.0
    z2_exceeds = p_R * (scaled + kicker) > scaled
    z2_threshold = scaled / (scaled + kicker) if scaled + kicker > 0 else math.inf
    return x1_exceeds, x2_exceeds, z2_exceeds, z2_threshold


def classify_sufficiency(params: ItParams, refined: bool = False) -> SufficiencyClass:
    """Classify reset reliability; costs are ignored, only probabilities
    matter.  With ``refined=True`` the tightened bounds drive the category."""
    require_params(params)
    p_A, p_F, p_D, p_R = params.p_A, params.p_F, params.p_D, params.p_R
    weak_b = basic_weak_bound(p_A, p_F, p_D)
    strong_b = basic_strong_bound(p_A, p_F)
    weak_r = refined_weak_bound(p_A, p_F, p_D)
    strong_r = refined_strong_bound(p_A, p_F)
    weak, strong = (weak_r, strong_r) if refined else (weak_b, strong_b)
    if p_R <= weak:
        category = "insufficient"
    elif p_R <= strong:
        category = "weak"
    else:
        category = "strong"

    x1_exceeds, x2_exceeds, z2_exceeds, z2_threshold = _dismissal_flags(p_A, p_F, p_D, p_R)
    if p_D < 1.0 / (2.0 + p_A):
        effectiveness = "lowly"
    elif p_D > 0.5:
        effectiveness = "highly"
    else:
        effectiveness = "nominally"
    return SufficiencyClass(
        category=category,
        refined=refined,
        basic_weak=weak_b,
        basic_strong=strong_b,
        refined_weak=weak_r,
        refined_strong=strong_r,
        x1_exceeds_one=x1_exceeds,
        x2_exceeds_one=x2_exceeds,
        z2_exceeds_one=z2_exceeds,
        z2_threshold=z2_threshold,
        defend_effectiveness=effectiveness,
    )


# ---------------------------------------------------------------------------
# partition geometry


@dataclass(frozen=True)
class PartitionGeometry:
    """Boundary quantities of the optimality partition in normalized
    cost coordinates, all functions of the probabilities alone.

    In the reliable-reset plane (axes c_A/c_R, c_D/c_R) the wait/defend
    boundary has intercept ``y0`` and the three regions meet at
    ``meeting_point_2d``.  In the free-attack plane (axes c_R/c_F,
    c_D/c_F) the wait/defend line runs from ``y1`` at the left edge to
    ``y2`` at the right edge, the defend/reset line has slope ``m1``,
    x-intercept ``x1`` and right-edge value ``y3``, and the wait/reset
    boundary is the vertical line ``x2``.  In the full three-dimensional
    box (z axis c_A/c_F) ``z1`` and ``z2`` are the heights of the
    wait/reset and defend/reset boundary planes at the far edges, and
    the regions meet along lines through ``meeting_point_3d_base`` and
    ``meeting_point_3d_face``.

    ``x1`` and ``x2`` are reported as signed ratios (infinite when the
    denominator vanishes); the ``*_exceeds_one`` flags use the
    cleared-denominator conditions and are the authoritative dismissal
    tests.
    """

    y0: float
    y1: float
    y2: float
    y3: float
    x1: float
    x2: float
    z1: float
    z2: float
    m1: float
    meeting_point_2d: tuple[float, float]
    meeting_point_3d_base: tuple[float, float, float]
    meeting_point_3d_face: tuple[float, float, float]
    x1_exceeds_one: bool
    x2_exceeds_one: bool
    z2_exceeds_one: bool


def partition_geometry(params: ItParams) -> PartitionGeometry:
    """Compute every partition boundary quantity from the probabilities."""
    require_params(params)
    p_A, p_F, p_D, p_R = params.p_A, params.p_F, params.p_D, params.p_R
    one = 1 + p_A
    weight = p_A * p_F + p_R * (p_A + p_F)

    y0 = one * p_F * p_D / (p_A + p_F * one)
    y1 = one * p_F * p_D * (1 - p_R) / weight
    y2 = one * p_F * p_D * (2 - p_R) / weight
    y3 = (p_R * (p_A + p_D) - p_F * (2 + p_A) * (1 - p_D) * (1 - p_R)) / (one * p_R)
    m1 = (p_R * (p_A + p_D) - p_F * (1 - p_D) * (1 - p_R)) / (one * p_R)
    z1 = (p_A * p_R - p_F * (2 + p_A) * (1 - p_R)) / (one * p_R)
    z2 = (p_R * (p_A + p_D) - p_F * (2 + p_A) * (1 - p_D) * (1 - p_R)) / (
        one * (1 - p_D) * p_R
    )

    with np.errstate(divide="ignore"):
        x1 = float(
            np.divide(
                one * p_F * (1 - p_D) * (1 - p_R),
                p_R * (p_A + p_D) - p_F * (1 - p_D) * (1 - p_R),
            )
        )
        x2 = float(np.divide(one * p_F * (1 - p_R), p_R * (p_A + p_F) - p_F))

    x1_exceeds, x2_exceeds, z2_exceeds, _ = _dismissal_flags(p_A, p_F, p_D, p_R)
    return PartitionGeometry(
        y0=y0,
        y1=y1,
        y2=y2,
        y3=y3,
        x1=x1,
        x2=x2,
        z1=z1,
        z2=z2,
        m1=m1,
        meeting_point_2d=(p_A / one, p_D),
        meeting_point_3d_base=(x2, p_D * x2, 0.0),
        meeting_point_3d_face=(1.0, p_D, z1),
        x1_exceeds_one=x1_exceeds,
        x2_exceeds_one=x2_exceeds,
        z2_exceeds_one=z2_exceeds,
    )


# ---------------------------------------------------------------------------
# partition sweeps


@dataclass(frozen=True)
class SweepCell:
    """One grid cell of a partition sweep, in axis coordinates."""

    x: float
    y: float
    z: float | None
    region: str
    lambda_wait: float
    lambda_defend: float
    lambda_reset: float
    margin: float


@dataclass(frozen=True)
class PartitionSweep:
    """Dense sweep of a normalized cost plane (or box).

    ``region`` holds small integer codes indexed per ``REGION_LABELS``;
    the gain and margin arrays are NaN on invalid cells.  Axis arrays are
    endpoint-inclusive.  ``cells()`` yields rows in the deterministic
    output order: x fastest, then y, then z.
    """

    plane: str
    axis_names: tuple[str, ...]
    xs: np.ndarray
    ys: np.ndarray
    zs: np.ndarray | None
    region: np.ndarray
    gain_wait: np.ndarray
    gain_defend: np.ndarray
    gain_reset: np.ndarray
    margin: np.ndarray

    def __post_init__(self):
        for name in ("xs", "ys", "zs", "region", "gain_wait", "gain_defend", "gain_reset", "margin"):
            arr = getattr(self, name)
            if arr is not None:
                arr.setflags(write=False)

    def cells(self) -> Iterator[SweepCell]:
        zs = (None,) if self.zs is None else self.zs
        for kz, z in enumerate(zs):
            for ky, y in enumerate(self.ys):
                for kx, x in enumerate(self.xs):
                    idx = (kz, ky, kx) if self.zs is not None else (ky, kx)
                    yield SweepCell(
                        x=float(x),
                        y=float(y),
                        z=None if z is None else float(z),
                        region=REGION_LABELS[int(self.region[idx])],
                        lambda_wait=float(self.gain_wait[idx]),
                        lambda_defend=float(self.gain_defend[idx]),
                        lambda_reset=float(self.gain_reset[idx]),
                        margin=float(self.margin[idx]),
                    )


def _classify_grid(gain_w, gain_d, gain_r, valid):
    """Label each cell by its cheapest policy, with ties and invalids."""
    stacked = np.stack([gain_w, gain_d, gain_r])
    order = np.sort(stacked, axis=0)
    margin = order[1] - order[0]
    region = np.argmin(stacked, axis=0).astype(np.int8)
    region[margin <= GAIN_TIE_TOL] = REGION_TIE
    region[~valid] = REGION_INVALID
    margin = np.where(valid, margin, np.nan)
    for arr in (gain_w, gain_d, gain_r):
        arr[~valid] = np.nan
    return region, margin


def _axis(resolution: int) -> np.ndarray:
    if resolution < 2:
        raise DomainError([f"grid resolution must be at least 2, got {resolution}"])
    return np.linspace(0.0, 1.0, resolution)


def _grid_tuple(grid, n_axes: int) -> tuple[int, ...]:
    if np.isscalar(grid):
        return (int(grid),) * n_axes
    out = tuple(int(g) for g in grid)
    if len(out) != n_axes:
        raise DomainError([f"expected {n_axes} grid resolutions, got {len(out)}"])
    return out


def partition_sweep(params: ItParams, plane: str, grid=101) -> PartitionSweep:
    """Sweep a normalized cost plane and label each cell's optimal policy.

    Three planes are supported.  ``"cA-cD"`` fixes a fully reliable
    reset (requires ``p_R == 1``) and sweeps x = c_A/c_R, y = c_D/c_R
    over [0, 1]; the failure cost drops out of every formula there.
    ``"cR-cD"`` fixes a cost-free attack (requires ``c_A == 0``) and
    sweeps x = c_R/c_F, y = c_D/c_F.  ``"3d"`` sweeps x = c_R/c_F,
    y = c_D/c_F, z = c_A/c_F over the unit box.  Cells whose implied
    costs violate the admissibility constraints keep their place in the
    grid with region "invalid" and NaN values.

    ``grid`` is the per-axis resolution, a scalar or one value per axis;
    endpoints are included.  Only the probability parameters (and, for
    the cost-normalized planes, none of the cost parameters) influence
    the labels, which are scale-invariant in the costs.
    """
    require_params(params)
    p_A, p_F, p_D, p_R = params.p_A, params.p_F, params.p_D, params.p_R

    if plane == PLANE_CA_CD:
        if p_R != 1.0:
            raise DomainError(
                [f"plane {plane!r} assumes a fully reliable reset; p_R is {p_R!r}"]
            )
        nx, ny = _grid_tuple(grid, 2)
        xs, ys = _axis(nx), _axis(ny)
        x, y = np.meshgrid(xs, ys, indexing="xy")  # (ny, nx)
        c_r = 1.0
        c_f = 2.0  # inert here: every formula carries c_F times (1 - p_R) = 0
        gain_w = np.asarray(_gain_wait(p_A, p_F, p_R, x * c_r, c_f, c_r))
        gain_d = np.asarray(_gain_defend(p_A, p_F, p_D, p_R, x * c_r, y * c_r, c_f, c_r))
        gain_r = np.broadcast_to(_gain_reset(p_A, c_r), x.shape).copy()
        valid = y < 1.0  # c_D < c_R; all other constraints hold by construction
        region, margin = _classify_grid(gain_w, gain_d, gain_r, valid)
        return PartitionSweep(
            plane=plane,
            axis_names=("c_A/c_R", "c_D/c_R"),
            xs=xs,
            ys=ys,
            zs=None,
            region=region,
            gain_wait=gain_w,
            gain_defend=gain_d,
            gain_reset=gain_r,
            margin=margin,
        )

    if plane == PLANE_CR_CD:
        if params.c_A != 0.0:
            raise DomainError(
                [f"plane {plane!r} assumes a cost-free attack; c_A is {params.c_A!r}"]
            )
        nx, ny = _grid_tuple(grid, 2)
        xs, ys = _axis(nx), _axis(ny)
        x, y = np.meshgrid(xs, ys, indexing="xy")
        with np.errstate(divide="ignore", invalid="ignore"):
            gain_w = np.asarray(_gain_wait(p_A, p_F, p_R, 0.0, 1.0, x))
            gain_d = np.asarray(_gain_defend(p_A, p_F, p_D, p_R, 0.0, y, 1.0, x))
            gain_r = np.asarray(_gain_reset(p_A, x)) * np.ones_like(y)
        valid = (x > 0.0) & (y < x)  # c_R > 0 and c_D < c_R; c_R <= c_F at x <= 1
        region, margin = _classify_grid(gain_w, gain_d, gain_r, valid)
        return PartitionSweep(
            plane=plane,
            axis_names=("c_R/c_F", "c_D/c_F"),
            xs=xs,
            ys=ys,
            zs=None,
            region=region,
            gain_wait=gain_w,
            gain_defend=gain_d,
            gain_reset=gain_r,
            margin=margin,
        )

    if plane == PLANE_3D:
        nx, ny, nz = _grid_tuple(grid, 3)
        xs, ys, zs = _axis(nx), _axis(ny), _axis(nz)
        z, y, x = np.meshgrid(zs, ys, xs, indexing="ij")  # (nz, ny, nx)
        with np.errstate(divide="ignore", invalid="ignore"):
            gain_w = np.asarray(_gain_wait(p_A, p_F, p_R, z, 1.0, x))
            gain_d = np.asarray(_gain_defend(p_A, p_F, p_D, p_R, z, y, 1.0, x))
            gain_r = np.asarray(_gain_reset(p_A, x)) * np.ones_like(y)
        valid = (x > 0.0) & (y < x) & (z < 1.0)
        region, margin = _classify_grid(gain_w, gain_d, gain_r, valid)
        return PartitionSweep(
            plane=plane,
            axis_names=("c_R/c_F", "c_D/c_F", "c_A/c_F"),
            xs=xs,
            ys=ys,
            zs=zs,
            region=region,
            gain_wait=gain_w,
            gain_defend=gain_d,
            gain_reset=gain_r,
            margin=margin,
        )

    raise DomainError(
        [f"unknown plane {plane!r}; expected one of {PLANE_CA_CD!r}, {PLANE_CR_CD!r}, {PLANE_3D!r}"]
    )
