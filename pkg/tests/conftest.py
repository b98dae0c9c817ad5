import numpy as np
import pytest
from hypothesis import settings

from raman_tuner.exact import grid_point
from raman_tuner.model import ModeIndex

settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60)
settings.load_profile("repo")


def expm_state(H, t, psi0=(1, 0, 0)):
    """Independent reference: dense matrix exponential."""
    import scipy.linalg

    return scipy.linalg.expm(-1j * np.asarray(H) * t) @ np.asarray(psi0, dtype=complex)


@pytest.fixture
def mode_31_2():
    return ModeIndex(31, 2)


@pytest.fixture
def table1_params(mode_31_2):
    return grid_point(mode_31_2).params(kappa=0.01)
