import numpy as np

from isl.surveys import crowded_flags, random_direction


def test_crowded_flags():
    assert crowded_flags([], 0.1) == []
    assert crowded_flags([0.3j], 0.1) == [False]
    assert crowded_flags([0j, 0.05, 1.0], 0.1) == [True, True, False]


def test_random_direction_unit_norm():
    d = random_direction(3, np.random.default_rng(0))
    assert d.shape == (3,) and abs(np.linalg.norm(d) - 1) < 1e-15
