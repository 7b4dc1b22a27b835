import numpy as np
import pytest

from ghzpurify.direct import GhzDiagonal
from ghzpurify.indirect import BellDiagonal


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_ghz(d, rng):
    return GhzDiagonal(rng.dirichlet(np.ones(d ** 3)).reshape(d, d, d))


def random_bell(d, rng):
    return BellDiagonal(rng.dirichlet(np.ones(d * d)).reshape(d, d))
