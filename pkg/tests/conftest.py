import math

import numpy as np
import pytest
from hypothesis import strategies as st

from punitive.market import MarketModel, example_one, example_two
from punitive.misreport import validate


@pytest.fixture
def ex1():
    return example_one()


@pytest.fixture
def ex2():
    return example_two()


def random_model(rng, n_states=None, max_states=5):
    """Valid model with well separated potentials above the cost floor."""
    L = n_states or int(rng.integers(1, max_states + 1))
    alpha = float(rng.uniform(0.05, 1.0))
    cs, cm = (float(x) for x in rng.uniform(0.0, 20.0, 2))
    floor = alpha * (cs + cm)
    support = floor + np.cumsum(rng.uniform(0.5, 30.0, L))
    probs = rng.dirichlet(np.ones(L)) * 0.9 + 0.1 / L
    probs[-1] = 1.0 - math.fsum(probs[:-1])
    return MarketModel.from_arrays(alpha, cs, cm, support, probs)


def random_policy(rng, L, tag="general"):
    r = np.zeros((L, L))
    for i in range(L):
        width = i + 1 if tag == "greedy" else L
        row = rng.dirichlet(np.ones(width))
        row[-1] = max(1.0 - math.fsum(row[:-1]), 0.0)
        r[i, :width] = row
    return validate(r, tag)


@st.composite
def models(draw, min_states=1, max_states=5):
    seed = draw(st.integers(0, 2**32 - 1))
    L = draw(st.integers(min_states, max_states))
    return random_model(np.random.default_rng(seed), L)


@st.composite
def model_and_policy(draw, tag="general", min_states=2, max_states=4):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    L = draw(st.integers(min_states, max_states))
    model = random_model(rng, L)
    return model, random_policy(rng, L, tag)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import VERDICTS
    except ImportError:
        return
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
