import itertools
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from brflow.io import load_game

DATA = Path(__file__).resolve().parents[1] / "src" / "brflow" / "data"


def data_path(name: str) -> Path:
    return DATA / name


@pytest.fixture(scope="session")
def ex21():
    return load_game(data_path("example21.json"))[1]


@pytest.fixture(scope="session")
def ex41():
    return load_game(data_path("example41.json"))[1]


@pytest.fixture(scope="session")
def ex51():
    return load_game(data_path("example51.json"))[1]


@pytest.fixture(scope="session")
def ex51_game():
    return load_game(data_path("example51.json"))[0]


def brute_force_potential(u, sigmas):
    """Sum over every pure profile; independent of the tensordot evaluator."""
    total = 0.0
    for y in itertools.product(*(range(k) for k in u.shape)):
        w = 1.0
        for i, a in enumerate(y):
            w *= sigmas[i][a]
        total += u[y] * w
    return total


def random_point(rng, counts):
    return np.concatenate([rng.dirichlet(np.ones(k))[1:] for k in counts])


shapes = st.lists(st.integers(2, 3), min_size=2, max_size=3).map(tuple)


@st.composite
def games_and_points(draw, n_points=1):
    shape = draw(shapes)
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    u = rng.uniform(-1, 1, size=shape)
    pts = [random_point(rng, shape) for _ in range(n_points)]
    return u, pts


# acceptance summary lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
