import numpy as np
import pytest

from adcalloc.channel import ChannelRealization


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def simple_channel():
    """Build a ChannelRealization directly from a dense gain matrix."""

    def build(gains, gamma):
        gains = np.asarray(gains, dtype=complex)
        supports = tuple(np.flatnonzero(np.abs(gains[:, k]) > 0)
                         for k in range(gains.shape[1]))
        counts = np.array([s.size for s in supports])
        return ChannelRealization(support=supports, path_counts=counts,
                                  complex_gains=gains,
                                  gamma=np.asarray(gamma, dtype=float))

    return build
