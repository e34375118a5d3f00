import math

import numpy as np
import pytest

from maxconf.symmetric import make_root_set

SQ = math.sqrt
QUTRIT = (SQ(0.5), SQ(0.3), SQ(0.2))
D7 = tuple(SQ(x) for x in (0.2, 0.2, 0.2, 0.12, 0.12, 0.08, 0.08))


def random_set(rng: np.random.Generator, n: int, d: int, uniform: bool = False, phases: bool = True):
    """Random root set with magnitudes bounded away from zero."""
    mags = np.ones(d) if uniform else rng.uniform(0.1, 1.0, d)
    mags = mags / np.linalg.norm(mags)
    ph = np.exp(2j * np.pi * rng.random(d)) if phases else np.ones(d)
    return make_root_set(n, mags * ph)


def random_sets(count: int, seed: int = 2024, max_n: int = 10):
    """Seeded family used by the property and acceptance suites; every fifth set is uniform."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        n = int(rng.integers(3, max_n + 1))
        d = int(rng.integers(2, n))
        out.append(random_set(rng, n, d, uniform=(i % 5 == 0)))
    return out


@pytest.fixture
def qutrit():
    return make_root_set(4, QUTRIT)


@pytest.fixture
def uniform():
    return make_root_set(4, [1 / SQ(3)] * 3)


@pytest.fixture
def qubit():
    return make_root_set(3, [SQ(2 / 3), SQ(1 / 3)])


@pytest.fixture
def d7():
    return make_root_set(8, D7)
