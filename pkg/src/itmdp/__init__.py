"""Average-cost decision toolkit for intrusion-tolerant systems.

The package models a service that is either operating normally, under
attack, or failed, and that at each stage can wait, run a defensive
action, or reset from a clean image.  It provides closed-form long-run
cost rates for the three stationary policies of interest, exact
partitions of cost space into optimality regions, reliability
classification of the reset channel, a generic average-cost MDP solver,
seeded Monte Carlo simulation with an optional compiled backend, a
belief filter over noisy detectors, and uniformization utilities for
the continuous-time variant.
"""

from .backend import resolve_backend
from .belief import (
    Belief,
    DetectorParams,
    ThresholdPolicy,
    TraceRow,
    build_observed_mdp,
    initial_belief,
    observation_matrices,
    pomdp_trace,
    simulate_pomdp,
    threshold_policy,
    update,
    validate_detector,
)
from .errors import (
    ConvergenceError,
    DomainError,
    ImpossibleObservationError,
    ItmdpError,
    MultichainError,
    SchemaError,
)
from .itmodel import (
    ACTION_DEFEND,
    ACTION_LABELS,
    ACTION_RESET,
    ACTION_WAIT,
    POLICY_DEFEND,
    POLICY_RESET,
    POLICY_WAIT,
    STATE_ATTACK,
    STATE_FAILURE,
    STATE_LABELS,
    STATE_NORMAL,
    ItParams,
    PartitionGeometry,
    PartitionSweep,
    PolicyComparison,
    PolicyTriple,
    PolicyValue,
    SufficiencyClass,
    SweepCell,
    basic_strong_bound,
    basic_weak_bound,
    build_mdp,
    classify_sufficiency,
    compare,
    evaluate_triple,
    lambda_defend,
    lambda_reset,
    lambda_wait,
    mttf_defend,
    mttf_reset,
    mttf_wait,
    partition_geometry,
    partition_sweep,
    refined_strong_bound,
    refined_weak_bound,
    validate_params,
)
from .mdp import (
    GenericMdp,
    PolicyEvaluation,
    RankedPolicy,
    RviResult,
    StationaryPolicy,
    enumerate_policies,
    evaluate_policy,
    relative_value_iteration,
    stationary_distribution,
    tie_groups,
    validate,
)
from .semimarkov import (
    SemiMarkovModel,
    UniformizedModel,
    evaluate_smdp_policy,
    timed_belief_update,
    transition_over_time,
    uniformize,
)
from .serialize import (
    load_detector,
    load_model,
    load_params,
    load_smdp,
    model_to_obj,
    params_to_obj,
    sweep_csv_text,
    trace_csv_text,
)
from .simulate import FirstPassage, SimConfig, SimResult, first_passage, simulate

__version__ = "0.1.0"

__all__ = [
    "ACTION_DEFEND",
    "ACTION_LABELS",
    "ACTION_RESET",
    "ACTION_WAIT",
    "Belief",
    "ConvergenceError",
    "DetectorParams",
    "DomainError",
    "FirstPassage",
    "GenericMdp",
    "ImpossibleObservationError",
    "ItParams",
    "ItmdpError",
    "MultichainError",
    "PartitionGeometry",
    "PartitionSweep",
    "PolicyComparison",
    "PolicyEvaluation",
    "PolicyTriple",
    "PolicyValue",
    "POLICY_DEFEND",
    "POLICY_RESET",
    "POLICY_WAIT",
    "RankedPolicy",
    "RviResult",
    "SchemaError",
    "SemiMarkovModel",
    "SimConfig",
    "SimResult",
    "StationaryPolicy",
    "STATE_ATTACK",
    "STATE_FAILURE",
    "STATE_LABELS",
    "STATE_NORMAL",
    "SufficiencyClass",
    "SweepCell",
    "ThresholdPolicy",
    "TraceRow",
    "UniformizedModel",
    "basic_strong_bound",
    "basic_weak_bound",
    "build_mdp",
    "build_observed_mdp",
    "classify_sufficiency",
    "compare",
    "enumerate_policies",
    "evaluate_policy",
    "evaluate_smdp_policy",
    "evaluate_triple",
    "first_passage",
    "initial_belief",
    "lambda_defend",
    "lambda_reset",
    "lambda_wait",
    "load_detector",
    "load_model",
    "load_params",
    "load_smdp",
    "model_to_obj",
    "mttf_defend",
    "mttf_reset",
    "mttf_wait",
    "observation_matrices",
    "params_to_obj",
    "partition_geometry",
    "partition_sweep",
    "pomdp_trace",
    "refined_strong_bound",
    "refined_weak_bound",
    "relative_value_iteration",
    "resolve_backend",
    "simulate",
    "simulate_pomdp",
    "stationary_distribution",
    "sweep_csv_text",
    "threshold_policy",
    "tie_groups",
    "timed_belief_update",
    "trace_csv_text",
    "transition_over_time",
    "uniformize",
    "update",
    "validate",
    "validate_detector",
    "validate_params",
    "__version__",
]
