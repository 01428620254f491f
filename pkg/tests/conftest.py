import numpy as np
import pytest
from hypothesis import settings

from pointleak.builtin import survey_system, ternary_system
from pointleak.prob_core import Channel, ProbVec, System

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def survey():
    return survey_system()


@pytest.fixture
def ternary():
    return ternary_system()


def random_system(rng, nx, ny, positive=True):
    prior = rng.dirichlet(np.ones(nx))
    rows = rng.dirichlet(np.ones(ny), size=nx)
    if not positive:
        rows[rng.random(rows.shape) < 0.2] = 0.0
        rows[np.arange(nx), rng.integers(0, ny, nx)] += 0.5
        rows /= rows.sum(axis=1, keepdims=True)
    return System(ProbVec(prior), Channel(rows))
