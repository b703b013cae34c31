from pathlib import Path

import numpy as np
import pytest

import energyshaping as es

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# state boxes where the catalog designs are valid (desired inertia positive
# definite for the pendubot; haptic workspace for the touch device)
PENDUBOT_Q_BOX = np.array([[np.pi - 0.6, np.pi + 0.6], [-0.45, 0.45]])
PENDUBOT_P_BOX = np.array([[-1.5, 1.5], [-1.5, 1.5]])
TOUCH_Q_BOX = np.array([[-0.5, 1.0], [0.1, 1.0], [-1.7, -0.2]])
TOUCH_P_BOX = np.array([[-0.01, 0.01]] * 3)


def sample_states(rng, q_box, p_box, count):
    qs = rng.uniform(q_box[:, 0], q_box[:, 1], size=(count, q_box.shape[0]))
    ps = rng.uniform(p_box[:, 0], p_box[:, 1], size=(count, p_box.shape[0]))
    return [es.State(q, p) for q, p in zip(qs, ps)]


@pytest.fixture(scope="session")
def pendubot():
    model = es.pendubot_model()
    return model, es.pendubot_design(model)


@pytest.fixture(scope="session")
def touch():
    model = es.touch_model()
    return model, es.touch_design(model)


@pytest.fixture(scope="session")
def config_dir():
    return CONFIG_DIR
