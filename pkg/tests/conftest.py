import numpy as np
import pytest

from panolayout import FIXTURE_FAMILIES
from panolayout.synth import make_fixture, render_signal

CORPUS_SEEDS = 20


@pytest.fixture(scope="session")
def corpus():
    """(family, seed) -> (room, clean signal, truth layout) for 20 seeds each."""
    out = {}
    for family in FIXTURE_FAMILIES:
        for seed in range(CORPUS_SEEDS):
            room = make_fixture(family, seed)
            signal, truth = render_signal(room)
            out[(family, seed)] = (room, signal, truth)
    return out


@pytest.fixture(scope="session")
def square_case(corpus):
    return corpus[("square", 0)]


@pytest.fixture(scope="session")
def l_room_case(corpus):
    return corpus[("l_room", 0)]


@pytest.fixture(scope="session")
def t_room_case(corpus):
    return corpus[("t_room", 0)]


def cyclic_delta(a, b, width):
    d = abs(float(a) - float(b)) % width
    return min(d, width - d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
