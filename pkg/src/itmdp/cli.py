"""Command-line interface.

Eight subcommands tie the library together: ``validate``, ``evaluate``,
``partition``, ``sufficiency``, ``solve``, ``simulate``, ``belief-sim``
and ``uniformize``.  Outputs are deterministic for fixed inputs and
seeds; every file written is accompanied by a ``<file>.manifest.json``
sidecar recording the command, resolved inputs, tool version, seeds and
wall-clock duration.  Exit codes: 0 success, 1 domain violation, 2
input or parse error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
import time

from . import __version__
from .belief import DetectorParams, ThresholdPolicy, pomdp_trace, simulate_pomdp
from .errors import (
    ConvergenceError,
    DomainError,
    ImpossibleObservationError,
    ItmdpError,
    MultichainError,
    SchemaError,
)
from .itmodel import (
    ACTION_LABELS,
    PLANE_3D,
    PLANE_CA_CD,
    PLANE_CR_CD,
    POLICY_DEFEND,
    POLICY_RESET,
    POLICY_WAIT,
    build_mdp,
    classify_sufficiency,
    evaluate_triple,
    partition_sweep,
    validate_params,
)
from .mdp import relative_value_iteration
from .semimarkov import transition_over_time, uniformize
from .serialize import (
    RunManifest,
    detector_to_obj,
    format_float,
    json_text,
    load_detector,
    load_model,
    load_params,
    load_smdp,
    matrix_csv_text,
    model_to_obj,
    params_to_obj,
    sweep_csv_text,
    trace_csv_text,
    write_with_manifest,
)
from .simulate import DEFAULT_STAGE_CAP, SimConfig, first_passage, simulate

POLICIES = {"W": POLICY_WAIT, "D": POLICY_DEFEND, "R": POLICY_RESET}


def _emit(args, text: str, inputs: dict, seeds=(), started: float | None = None) -> None:
    out = getattr(args, "out", None)
    if out:
        duration = 0.0 if started is None else time.perf_counter() - started
        manifest = RunManifest(
            command=args.command,
            version=__version__,
            inputs=inputs,
            seeds=tuple(int(s) for s in seeds),
            duration_seconds=duration,
        )
        write_with_manifest(out, text, manifest)
    else:
        sys.stdout.write(text)


def _state_index(labels, text: str) -> int:
    if text in labels:
        return labels.index(text)
    try:
        idx = int(text)
    except ValueError:
        raise DomainError([f"unknown state {text!r}; expected one of {labels} or an index"])
    if not 0 <= idx < len(labels):
        raise DomainError([f"state index {idx} out of range"])
    return idx


def _sim_config(args, labels) -> SimConfig:
    return SimConfig(
        stages=args.stages,
        trajectories=args.trajectories,
        seed=args.seed,
        burn_in=args.burn_in,
        initial_state=_state_index(labels, args.initial_state),
    )


def _triple_obj(params) -> dict:
    triple = evaluate_triple(params)
    basic = classify_sufficiency(params, refined=False)
    refined = classify_sufficiency(params, refined=True)
    policies = {}
    for label, value in (("W", triple.wait), ("D", triple.defend), ("R", triple.reset)):
        policies[label] = {
            "gain": value.gain,
            "maintenance": value.maintenance,
            "failure": value.failure,
            "mttf": value.mttf,
        }
    return {
        "lambda_wait": triple.lambda_wait,
        "lambda_defend": triple.lambda_defend,
        "lambda_reset": triple.lambda_reset,
        "optimal": list(triple.optimal),
        "recommended": triple.recommended,
        "policies": policies,
        "cycle_cost": triple.cycle_cost,
        "cycle_weight": triple.cycle_weight,
        "sufficiency_basic": basic.category,
        "sufficiency_refined": refined.category,
    }


def _triple_text(obj: dict) -> str:
    lines = []
    for key in ("lambda_wait", "lambda_defend", "lambda_reset"):
        lines.append(f"{key}={format_float(obj[key])}")
    lines.append("optimal=" + ",".join(obj["optimal"]))
    lines.append(f"recommended={obj['recommended']}")
    for label in ACTION_LABELS:
        entry = obj["policies"][label]
        for field in ("gain", "maintenance", "failure", "mttf"):
            lines.append(f"{label}.{field}={format_float(entry[field])}")
    lines.append(f"cycle_cost={format_float(obj['cycle_cost'])}")
    lines.append(f"cycle_weight={format_float(obj['cycle_weight'])}")
    lines.append(f"sufficiency.basic={obj['sufficiency_basic']}")
    lines.append(f"sufficiency.refined={obj['sufficiency_refined']}")
    return "\n".join(lines) + "\n"


def cmd_validate(args) -> int:
    params = load_params(args.params)
    violations = validate_params(params)
    if violations:
        for line in violations:
            print(line)
        return 1
    print("ok")
    return 0


def cmd_evaluate(args) -> int:
    started = time.perf_counter()
    params = load_params(args.params)
    obj = _triple_obj(params)
    inputs = {"params": params_to_obj(params)}
    if args.emit_model:
        model_text = json_text(model_to_obj(build_mdp(params)))
        duration = time.perf_counter() - started
        write_with_manifest(
            args.emit_model,
            model_text,
            RunManifest("evaluate", __version__, inputs, (), duration),
        )
    text = json_text(obj) if args.json else _triple_text(obj)
    _emit(args, text, inputs, started=started)
    return 0


def cmd_partition(args) -> int:
    started = time.perf_counter()
    params = load_params(args.params)
    grid = args.grid[0] if len(args.grid) == 1 else tuple(args.grid)
    sweep = partition_sweep(params, args.plane, grid)
    text = sweep_csv_text(sweep)
    inputs = {"params": params_to_obj(params), "plane": args.plane, "grid": list(args.grid)}
    _emit(args, text, inputs, started=started)
    return 0


def cmd_sufficiency(args) -> int:
    started = time.perf_counter()
    params = load_params(args.params)
    result = classify_sufficiency(params, refined=args.refined)
    obj = {
        "category": result.category,
        "refined": result.refined,
        "thresholds": {
            "basic_weak": result.basic_weak,
            "basic_strong": result.basic_strong,
            "refined_weak": result.refined_weak,
            "refined_strong": result.refined_strong,
        },
        "flags": {
            "x1_exceeds_one": result.x1_exceeds_one,
            "x2_exceeds_one": result.x2_exceeds_one,
            "z2_exceeds_one": result.z2_exceeds_one,
        },
        "z2_threshold": result.z2_threshold,
        "defend_effectiveness": result.defend_effectiveness,
    }
    if args.json:
        text = json_text(obj)
    else:
        lines = [
            f"category={result.category}",
            f"mode={'refined' if result.refined else 'basic'}",
            f"basic_weak={format_float(result.basic_weak)}",
            f"basic_strong={format_float(result.basic_strong)}",
            f"refined_weak={format_float(result.refined_weak)}",
            f"refined_strong={format_float(result.refined_strong)}",
            f"x1_exceeds_one={str(result.x1_exceeds_one).lower()}",
            f"x2_exceeds_one={str(result.x2_exceeds_one).lower()}",
            f"z2_exceeds_one={str(result.z2_exceeds_one).lower()}",
            f"z2_threshold={format_float(result.z2_threshold)}",
            f"defend_effectiveness={result.defend_effectiveness}",
        ]
        text = "\n".join(lines) + "\n"
    _emit(args, text, {"params": params_to_obj(params), "refined": args.refined}, started=started)
    return 0


def cmd_solve(args) -> int:
    started = time.perf_counter()
    if bool(args.params) == bool(args.model):
        raise SchemaError("solve needs exactly one of --params or --model")
    if args.params:
        params = load_params(args.params)
        model = build_mdp(params)
        inputs = {"params": params_to_obj(params)}
    else:
        model = load_model(args.model)
        inputs = {"model": model_to_obj(model)}
    result = relative_value_iteration(model)
    obj = {
        "gain": result.gain,
        "policy": [model.action_labels[a] for a in result.policy],
        "bias": [float(b) for b in result.bias],
        "iterations": result.iterations,
        "span": result.span,
        "greedy_actions": [
            [model.action_labels[a] for a in actions] for actions in result.greedy_actions
        ],
    }
    if args.json:
        text = json_text(obj)
    else:
        lines = [
            f"gain={format_float(result.gain)}",
            "policy=" + ",".join(obj["policy"]),
            "bias=" + ",".join(format_float(b) for b in result.bias),
            f"iterations={result.iterations}",
            f"span={format_float(result.span)}",
        ]
        for i, actions in enumerate(obj["greedy_actions"]):
            lines.append(f"greedy.{model.state_labels[i]}=" + ",".join(actions))
        text = "\n".join(lines) + "\n"
    _emit(args, text, inputs, started=started)
    return 0


def _sim_result_obj(result, policy_label: str, labels) -> dict:
    passage = None
    if result.first_passage is not None:
        fp = result.first_passage
        passage = {
            "source": labels[fp.source],
            "target": labels[fp.target],
            "mean_stages": fp.mean_stages,
            "std_error": fp.std_error,
            "count": fp.count,
            "censored": fp.censored,
        }
    return {
        "policy": policy_label,
        "mean_cost_per_stage": result.mean_cost_per_stage,
        "std_error": result.std_error,
        "maintenance_mean": result.maintenance_mean,
        "failure_mean": result.failure_mean,
        "occupancy": [float(x) for x in result.occupancy],
        "stages": result.stages,
        "trajectories": result.trajectories,
        "burn_in": result.burn_in,
        "seed": result.seed,
        "first_passage": passage,
    }


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    params = load_params(args.params)
    model = build_mdp(params)
    policy = POLICIES[args.policy]
    config = _sim_config(args, model.state_labels)
    if (args.passage_source is None) != (args.passage_target is None):
        raise SchemaError("--passage-source and --passage-target go together")
    if args.passage_source is not None:
        source = _state_index(model.state_labels, args.passage_source)
        target = _state_index(model.state_labels, args.passage_target)
        result = first_passage(
            model, policy, source, target, config,
            stage_cap=args.stage_cap, backend=args.backend,
        )
    else:
        result = simulate(model, policy, config, backend=args.backend)
    obj = _sim_result_obj(result, args.policy, model.state_labels)
    inputs = {
        "params": params_to_obj(params),
        "policy": args.policy,
        "stages": args.stages,
        "trajectories": args.trajectories,
        "burn_in": args.burn_in,
        "initial_state": args.initial_state,
        "passage_source": args.passage_source,
        "passage_target": args.passage_target,
    }
    _emit(args, json_text(obj), inputs, seeds=(args.seed,), started=started)
    return 0


def cmd_belief_sim(args) -> int:
    started = time.perf_counter()
    params = load_params(args.params)
    detector = load_detector(args.detector)
    model = build_mdp(params)
    policy = ThresholdPolicy(
        defend_on_attack_mass=args.defend_threshold,
        reset_on_failure_mass=args.reset_threshold,
    )
    config = _sim_config(args, model.state_labels)
    result = simulate_pomdp(model, detector, policy, config, backend=args.backend)
    obj = _sim_result_obj(result, "threshold", model.state_labels)
    obj["defend_threshold"] = args.defend_threshold
    obj["reset_threshold"] = args.reset_threshold
    inputs = {
        "params": params_to_obj(params),
        "detector": detector_to_obj(detector),
        "defend_threshold": args.defend_threshold,
        "reset_threshold": args.reset_threshold,
        "stages": args.stages,
        "trajectories": args.trajectories,
        "burn_in": args.burn_in,
        "initial_state": args.initial_state,
    }
    if args.trace_out:
        rows = pomdp_trace(model, detector, policy, config)
        trace_text = trace_csv_text(rows)
        duration = time.perf_counter() - started
        write_with_manifest(
            args.trace_out,
            trace_text,
            RunManifest("belief-sim", __version__, inputs, (args.seed,), duration),
        )
    _emit(args, json_text(obj), inputs, seeds=(args.seed,), started=started)
    return 0


def cmd_uniformize(args) -> int:
    started = time.perf_counter()
    smdp = load_smdp(args.smdp)
    uni = uniformize(smdp)
    labels = smdp.embedded.action_labels
    inputs = {"smdp": args.smdp, "action": args.action, "tau": args.tau}
    if args.tau is None:
        obj = {
            "d_bar": uni.d_bar,
            "transition_bar": uni.transition_bar.tolist(),
            "exit_means": uni.exit_means.tolist(),
        }
        _emit(args, json_text(obj), inputs, started=started)
        return 0
    if args.action in labels:
        action = labels.index(args.action)
    else:
        try:
            action = int(args.action)
        except ValueError:
            raise DomainError([f"unknown action {args.action!r}"])
        if not 0 <= action < len(labels):
            raise DomainError([f"action index {action} out of range"])
    matrix = transition_over_time(uni, action, args.tau)
    if args.json:
        text = json_text(
            {
                "d_bar": uni.d_bar,
                "action": labels[action],
                "tau": args.tau,
                "matrix": matrix.tolist(),
            }
        )
    else:
        text = matrix_csv_text(matrix)
    _emit(args, text, inputs, started=started)
    return 0


def _add_sim_flags(sub) -> None:
    sub.add_argument("--stages", type=int, default=10_000)
    sub.add_argument("--trajectories", type=int, default=32)
    sub.add_argument("--seed", type=int, default=1)
    sub.add_argument("--burn-in", dest="burn_in", type=int, default=0)
    sub.add_argument("--initial-state", dest="initial_state", default="N")
    sub.add_argument("--backend", choices=("numba", "numpy", "auto"), default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="itmdp",
        description="Average-cost decision toolkit for intrusion-tolerant systems.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("validate", help="check a parameter file")
    sub.add_argument("--params", required=True)
    sub.set_defaults(func=cmd_validate)

    sub = commands.add_parser("evaluate", help="closed-form policy report")
    sub.add_argument("--params", required=True)
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.add_argument("--emit-model", dest="emit_model")
    sub.set_defaults(func=cmd_evaluate)

    sub = commands.add_parser("partition", help="sweep a cost plane into optimality regions")
    sub.add_argument("--params", required=True)
    sub.add_argument("--plane", choices=(PLANE_CA_CD, PLANE_CR_CD, PLANE_3D), default=PLANE_CA_CD)
    sub.add_argument("--grid", type=int, nargs="+", default=[101])
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_partition)

    sub = commands.add_parser("sufficiency", help="classify reset reliability")
    sub.add_argument("--params", required=True)
    sub.add_argument("--refined", action="store_true")
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_sufficiency)

    sub = commands.add_parser("solve", help="relative value iteration on a model")
    sub.add_argument("--params")
    sub.add_argument("--model")
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_solve)

    sub = commands.add_parser("simulate", help="Monte Carlo policy estimate")
    sub.add_argument("--params", required=True)
    sub.add_argument("--policy", choices=tuple(POLICIES), required=True)
    _add_sim_flags(sub)
    sub.add_argument("--passage-source", dest="passage_source")
    sub.add_argument("--passage-target", dest="passage_target")
    sub.add_argument("--stage-cap", dest="stage_cap", type=int, default=DEFAULT_STAGE_CAP)
    # output is always JSON; the flag is accepted for uniformity
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_simulate)

    sub = commands.add_parser("belief-sim", help="simulate threshold control on beliefs")
    sub.add_argument("--params", required=True)
    sub.add_argument("--detector", required=True)
    sub.add_argument("--defend-threshold", dest="defend_threshold", type=float, default=0.5)
    sub.add_argument("--reset-threshold", dest="reset_threshold", type=float, default=0.5)
    _add_sim_flags(sub)
    sub.add_argument("--trace-out", dest="trace_out")
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_belief_sim)

    sub = commands.add_parser("uniformize", help="uniformized chain and time-tau matrices")
    sub.add_argument("--smdp", required=True)
    sub.add_argument("--action", default="0")
    sub.add_argument("--tau", type=float, default=None)
    sub.add_argument("--json", action="store_true")
    sub.add_argument("--out")
    sub.set_defaults(func=cmd_uniformize)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, MultichainError, ImpossibleObservationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ItmdpError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
