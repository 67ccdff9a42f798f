"""File formats: strict JSON loaders, CSV emitters, atomic writes.

Every floating-point value is rendered with ``repr``, the shortest
string that round-trips to the same double, so emitted files re-ingest
to bit-identical analyses.  Loaders are strict: unknown keys, missing
keys, and wrongly typed values are schema errors, never warnings.
Writes go through a temp-file-plus-rename so readers never observe a
half-written file.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .belief import DetectorParams, OBS_LABELS
from .errors import SchemaError
from .itmodel import ItParams, PartitionSweep
from .mdp import GenericMdp
from .semimarkov import SemiMarkovModel

PARAM_KEYS = ("p_A", "p_F", "p_D", "p_R", "c_A", "c_D", "c_F", "c_R")
DETECTOR_REQUIRED = ("q_A_given_N", "q_N_given_A")
DETECTOR_OPTIONAL = (
    "q_A_given_N_after_defend",
    "q_N_given_A_after_defend",
    "failure_fidelity",
)
MODEL_REQUIRED = ("n_states", "n_actions", "state_labels", "action_labels", "transition", "cost")
MODEL_OPTIONAL = ("observation", "cost_channel", "cost_maintenance")


def format_float(x) -> str:
    return repr(float(x))


def _require_number(obj, key: str) -> float:
    value = obj[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {key!r} must be a number, got {type(value).__name__}")
    return float(value)


def _check_keys(obj: dict, required, optional, what: str) -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be a JSON object")
    keys = set(obj)
    missing = [k for k in required if k not in keys]
    unknown = sorted(keys - set(required) - set(optional))
    if missing:
        raise SchemaError(f"{what} is missing field(s): {', '.join(missing)}")
    if unknown:
        raise SchemaError(f"{what} has unknown field(s): {', '.join(unknown)}")


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from exc


# --------------------------------------------------------------------------
# the eight-parameter file


def params_to_obj(params: ItParams) -> dict:
    return {key: float(getattr(params, key)) for key in PARAM_KEYS}


def obj_to_params(obj) -> ItParams:
    _check_keys(obj, PARAM_KEYS, (), "parameter file")
    return ItParams(**{key: _require_number(obj, key) for key in PARAM_KEYS})


def load_params(path: str) -> ItParams:
    return obj_to_params(_read_json(path))


# --------------------------------------------------------------------------
# detector file


def detector_to_obj(detector: DetectorParams) -> dict:
    obj = {
        "q_A_given_N": float(detector.q_A_given_N),
        "q_N_given_A": float(detector.q_N_given_A),
    }
    if detector.q_A_given_N_after_defend is not None:
        obj["q_A_given_N_after_defend"] = float(detector.q_A_given_N_after_defend)
    if detector.q_N_given_A_after_defend is not None:
        obj["q_N_given_A_after_defend"] = float(detector.q_N_given_A_after_defend)
    if detector.failure_fidelity != 1.0:
        obj["failure_fidelity"] = float(detector.failure_fidelity)
    return obj


def obj_to_detector(obj) -> DetectorParams:
    _check_keys(obj, DETECTOR_REQUIRED, DETECTOR_OPTIONAL, "detector file")
    kwargs = {key: _require_number(obj, key) for key in DETECTOR_REQUIRED}
    for key in DETECTOR_OPTIONAL:
        if key in obj:
            kwargs[key] = _require_number(obj, key)
    return DetectorParams(**kwargs)


def load_detector(path: str) -> DetectorParams:
    return obj_to_detector(_read_json(path))


# --------------------------------------------------------------------------
# generic model file


def _tags_if_representable(model: GenericMdp):
    """Per-entry M/F tags when the split is all-or-nothing, else None."""
    gm, g = model.cost_maintenance, model.cost
    full = gm == g
    empty = gm == 0.0
    if not np.all(full | empty):
        return None
    tags = np.where(full & (g > 0.0), "M", "F")
    return tags.tolist()


def model_to_obj(model: GenericMdp) -> dict:
    obj = {
        "n_states": int(model.n_states),
        "n_actions": int(model.n_actions),
        "state_labels": list(model.state_labels),
        "action_labels": list(model.action_labels),
        "transition": model.transition.tolist(),
        "cost": model.cost.tolist(),
    }
    if model.observation is not None:
        obj["observation"] = model.observation.tolist()
    if model.cost_maintenance is not None:
        tags = _tags_if_representable(model)
        if tags is not None:
            obj["cost_channel"] = tags
        else:
            obj["cost_maintenance"] = model.cost_maintenance.tolist()
    return obj


def obj_to_model(obj) -> GenericMdp:
    _check_keys(obj, MODEL_REQUIRED, MODEL_OPTIONAL, "model file")
    if "cost_channel" in obj and "cost_maintenance" in obj:
        raise SchemaError("model file carries both cost_channel and cost_maintenance")
    try:
        transition = np.asarray(obj["transition"], dtype=np.float64)
        cost = np.asarray(obj["cost"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"transition/cost are not numeric arrays ({exc})") from exc
    n, m = int(obj["n_states"]), int(obj["n_actions"])
    if transition.shape != (m, n, n):
        raise SchemaError(
            f"transition shape {transition.shape} does not match declared "
            f"({m}, {n}, {n})"
        )
    observation = None
    if "observation" in obj:
        observation = np.asarray(obj["observation"], dtype=np.float64)
    maintenance = None
    if "cost_maintenance" in obj:
        maintenance = np.asarray(obj["cost_maintenance"], dtype=np.float64)
    elif "cost_channel" in obj:
        tags = np.asarray(obj["cost_channel"])
        if tags.shape != cost.shape:
            raise SchemaError(
                f"cost_channel shape {tags.shape} does not match cost shape {cost.shape}"
            )
        upper = np.char.upper(tags.astype(str))
        if not np.all((upper == "M") | (upper == "F")):
            raise SchemaError("cost_channel entries must be 'M' or 'F'")
        maintenance = np.where(upper == "M", cost, 0.0)
    return GenericMdp(
        transition=transition,
        cost=cost,
        state_labels=tuple(str(s) for s in obj["state_labels"]),
        action_labels=tuple(str(a) for a in obj["action_labels"]),
        observation=observation,
        cost_maintenance=maintenance,
    )


def load_model(path: str) -> GenericMdp:
    return obj_to_model(_read_json(path))


# --------------------------------------------------------------------------
# semi-Markov model file: a model object plus durations


def smdp_to_obj(model: SemiMarkovModel) -> dict:
    obj = model_to_obj(model.embedded)
    obj["durations"] = model.durations.tolist()
    return obj


def obj_to_smdp(obj) -> SemiMarkovModel:
    if not isinstance(obj, dict) or "durations" not in obj:
        raise SchemaError("semi-Markov file must carry a durations field")
    rest = {k: v for k, v in obj.items() if k != "durations"}
    embedded = obj_to_model(rest)
    try:
        durations = np.asarray(obj["durations"], dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"durations must be a numeric array: {exc}")
    if durations.shape != embedded.transition.shape:
        raise SchemaError(
            f"durations shape {durations.shape} does not match the "
            f"transition shape {embedded.transition.shape}"
        )
    return SemiMarkovModel(embedded=embedded, durations=durations)


def load_smdp(path: str) -> SemiMarkovModel:
    return obj_to_smdp(_read_json(path))


# --------------------------------------------------------------------------
# CSV emitters


def sweep_csv_text(sweep: PartitionSweep) -> str:
    three_d = sweep.zs is not None
    header = "x,y,z" if three_d else "x,y"
    lines = [f"{header},region,lambda_W,lambda_D,lambda_R,margin"]
    for cell in sweep.cells():
        coords = [format_float(cell.x), format_float(cell.y)]
        if three_d:
            coords.append(format_float(cell.z))
        lines.append(
            ",".join(
                coords
                + [
                    cell.region,
                    format_float(cell.lambda_wait),
                    format_float(cell.lambda_defend),
                    format_float(cell.lambda_reset),
                    format_float(cell.margin),
                ]
            )
        )
    return "\n".join(lines) + "\n"


def trace_csv_text(rows, action_labels=("W", "D", "R"), obs_labels=OBS_LABELS) -> str:
    lines = ["stage,b_N,b_A,b_F,action,observation"]
    for row in rows:
        lines.append(
            ",".join(
                [str(row.stage)]
                + [format_float(v) for v in row.belief]
                + [action_labels[row.action], obs_labels[row.observation]]
            )
        )
    return "\n".join(lines) + "\n"


def matrix_csv_text(matrix: np.ndarray) -> str:
    rows = np.asarray(matrix, dtype=np.float64)
    lines = [",".join(format_float(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _json_clean(obj):
    """Interchange-safe copy: non-finite floats become null, since bare
    Infinity/NaN tokens are not part of the JSON grammar."""
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def json_text(obj) -> str:
    return json.dumps(_json_clean(obj), indent=2, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# run manifests and atomic output


@dataclass(frozen=True)
class RunManifest:
    """Provenance record accompanying every file a command writes."""

    command: str
    version: str
    inputs: dict
    seeds: tuple[int, ...]
    duration_seconds: float

    def to_obj(self) -> dict:
        return {
            "command": self.command,
            "version": self.version,
            "inputs": self.inputs,
            "seeds": list(self.seeds),
            "duration_seconds": float(self.duration_seconds),
        }


def atomic_write_text(path: str, text: str) -> None:
    """Write UTF-8 text through a same-directory temp file and rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".itmdp-", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(text.encode("utf-8"))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def manifest_path(out_path: str) -> str:
    return out_path + ".manifest.json"


def write_with_manifest(path: str, text: str, manifest: RunManifest) -> None:
    """Write the data file, then its sidecar manifest.

    The data file's bytes depend only on the command inputs; wall-clock
    duration lives in the sidecar so repeated runs stay byte-identical.
    """
    atomic_write_text(path, text)
    atomic_write_text(manifest_path(path), json_text(manifest.to_obj()))
