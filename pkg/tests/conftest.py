import numpy as np
import pytest

from dlnflow import synthesize_scatter


@pytest.fixture(scope="session")
def reference_pair():
    """The d=5 pair every experiment-scale test shares."""
    return synthesize_scatter(5, 8086, (0.4, 0.6))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240515)


def draw_weights(rng, dim, norm_lo=0.1, norm_hi=10.0):
    """Random direction with norm in [norm_lo, norm_hi]; never the zero vector."""
    w = rng.standard_normal(dim)
    while np.linalg.norm(w) < 1e-3:
        w = rng.standard_normal(dim)
    return w * rng.uniform(norm_lo, norm_hi) / np.linalg.norm(w)
