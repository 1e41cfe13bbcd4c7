import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from graphon_mpnn import SbmSpec

settings.register_profile(
    "suite",
    max_examples=30,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


CONVERGENCE_S = [[0.55, 0.05, 0.02],
                 [0.05, 0.55, 0.05],
                 [0.02, 0.05, 0.55]]
LINKPRED_S = [[0.60, 0.05, 0.02],
              [0.05, 0.60, 0.05],
              [0.02, 0.05, 0.60]]
BLOCK_MASS = [0.45, 0.10, 0.45]


@pytest.fixture(scope="session")
def convergence_spec():
    """Three blocks, outer two interchangeable; in-block probability 0.55."""
    return SbmSpec(block_mass=BLOCK_MASS, S=CONVERGENCE_S, B=np.ones((3, 1)))


@pytest.fixture(scope="session")
def linkpred_spec():
    """Same blocks with in-block probability raised to 0.6 for edge hiding."""
    return SbmSpec(block_mass=BLOCK_MASS, S=LINKPRED_S, B=np.ones((3, 1)))
