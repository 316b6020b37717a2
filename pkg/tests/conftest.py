import numpy as np
import pytest

from roomfield import FieldTensor, FrequencySet, GridSpec, Room


@pytest.fixture
def small_room():
    return Room(4.0, 6.0, 3.0, t60=0.6)


@pytest.fixture
def small_grid():
    return GridSpec(4, 4, up_x=1, up_y=1, z_o=1.0)


@pytest.fixture
def small_freqs():
    return FrequencySet(2.0 * np.pi * np.array([50.0, 100.0, 150.0]))


def random_tensor(room, grid, freqs, seed=0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    shape = (len(freqs),) + grid.fine_shape
    values = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    return FieldTensor(values, room, grid, freqs)
