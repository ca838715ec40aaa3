import math

import numpy as np
import pytest

from escrate.symbolic import Subshift
from escrate.thermo import Potential

LOG2 = math.log(2)


@pytest.fixture
def full2():
    return Subshift.full(2)


@pytest.fixture
def cantor_shift():
    return Subshift.full(2, labels=("0", "2"))


@pytest.fixture
def golden():
    return Subshift.golden_mean()


@pytest.fixture
def half(full2):
    """phi = -log 2 on the full 2-shift (the Bernoulli(1/2) measure)."""
    return Potential.constant(full2, -LOG2)


def random_potential(s, depth, seed):
    rng = np.random.default_rng(seed)
    return Potential(s, depth, rng.normal(scale=0.7, size=s.alphabet_size ** depth))


def three_symbol_shift():
    """A primitive 3-symbol SFT with a forbidden pair, used to vary the
    transition structure in tests."""
    return Subshift([[1, 1, 0], [0, 1, 1], [1, 1, 1]])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
