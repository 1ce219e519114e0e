import math

import numpy as np
import pytest

from cablecal.data import SyntheticScenario, synthesize
from cablecal.kinematics import RobotModel

# Generic 6R geometry without parallel consecutive axes. An IRB120-style
# chain (alpha_2 = 0) leaves d_2/d_3 nearly redundant; see IRB_LIKE.
GENERIC = RobotModel.from_arrays(
    a=[30, 260, 60, 10, 15, 20],
    d=[290, 15, 10, 300, 12, 120],
    alpha=[-1.4, 0.2, -1.3, 1.45, -1.5, 0.25],
    theta_offset=[0, -1.5, 0.1, 0, 0, 0],
    anchor=(600, 300, -200),
)

IRB_LIKE = RobotModel.from_arrays(
    a=[0, 270, 70, 0, 0, 20],
    d=[290, 0, 0, 302, 0, 122],
    alpha=[-math.pi / 2, 0, -math.pi / 2, math.pi / 2, -math.pi / 2, 0],
    theta_offset=[0, -math.pi / 2, 0, 0, 0, 0],
    anchor=(600, 300, -200),
)


def random_model(rng):
    return RobotModel.from_arrays(
        a=rng.uniform(-300, 300, 6),
        d=rng.uniform(-300, 300, 6),
        alpha=rng.uniform(-math.pi, math.pi, 6),
        theta_offset=rng.uniform(-math.pi, math.pi, 6),
        anchor=rng.uniform(-800, 800, 3),
    )


def scenario(seed=0, noise=0.0, n=120, model=GENERIC, **kw):
    return synthesize(SyntheticScenario(model, noise_std=noise, seed=seed, n_points=n, **kw))


@pytest.fixture
def generic():
    return GENERIC


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
