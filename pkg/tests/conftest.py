import json

import numpy as np
import pytest

from itmdp import DetectorParams, ItParams

# A fixed parameter set used across many tests. Chosen so every probability
# is a dyadic-friendly rational and all three policies have distinct costs.
PARAMS_A = dict(p_A=0.5, p_F=0.5, p_D=0.6, p_R=0.9,
                c_A=1.0, c_D=0.5, c_F=3.0, c_R=1.5)

# Parameters at which all three policies cost exactly the same.
PARAMS_MEETING = dict(p_A=0.5, p_F=0.3, p_D=0.6, p_R=1.0,
                      c_A=2.0 / 3.0, c_D=1.2, c_F=10.0, c_R=2.0)

DETECTOR_A = dict(q_A_given_N=0.05, q_N_given_A=0.2,
                  q_A_given_N_after_defend=0.05,
                  q_N_given_A_after_defend=0.1,
                  failure_fidelity=0.95)


@pytest.fixture
def params_a():
    return ItParams(**PARAMS_A)


@pytest.fixture
def params_meeting():
    return ItParams(**PARAMS_MEETING)


@pytest.fixture
def detector_a():
    return DetectorParams(**DETECTOR_A)


@pytest.fixture
def params_a_file(tmp_path):
    path = tmp_path / "params_a.json"
    path.write_text(json.dumps(PARAMS_A))
    return str(path)


@pytest.fixture
def detector_a_file(tmp_path):
    path = tmp_path / "detector_a.json"
    path.write_text(json.dumps(DETECTOR_A))
    return str(path)


def random_params(rng):
    """Draw one valid parameter set. Probabilities stay away from the
    boundary so no policy comparison degenerates."""
    p_A = rng.uniform(0.05, 0.95)
    p_F = rng.uniform(0.05, 0.95)
    p_D = rng.uniform(0.0, 0.95)
    p_R = rng.uniform(0.05, 1.0)
    c_F = rng.uniform(1.0, 10.0)
    c_R = c_F * rng.uniform(0.1, 1.0)
    c_A = c_F * rng.uniform(0.0, 0.999)
    c_D = c_R * rng.uniform(0.0, 0.999)
    return ItParams(p_A=p_A, p_F=p_F, p_D=p_D, p_R=p_R,
                    c_A=c_A, c_D=c_D, c_F=c_F, c_R=c_R)


def random_unichain_model(rng, n_states, n_actions, split=False):
    """A dense random MDP; dense positive rows make every policy unichain."""
    from itmdp import GenericMdp

    transition = rng.uniform(0.05, 1.0, size=(n_actions, n_states, n_states))
    transition /= transition.sum(axis=2, keepdims=True)
    cost = rng.uniform(0.0, 5.0, size=(n_actions, n_states, n_states))
    maintenance = cost * rng.uniform(0.0, 1.0, size=cost.shape) if split else None
    return GenericMdp(transition=transition, cost=cost, cost_maintenance=maintenance)


def assert_distribution(vec, tol=1e-10):
    vec = np.asarray(vec, dtype=float)
    assert np.all(vec >= -tol)
    assert abs(vec.sum() - 1.0) < tol
