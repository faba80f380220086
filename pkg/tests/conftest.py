import sys

import numpy as np
import pytest

from tile_ensemble.synth import make_scene


def server_cmd(*args) -> str:
    return " ".join([sys.executable, "-m", "tile_ensemble.servers", *map(str, args)])


@pytest.fixture(scope="session")
def scenes():
    rng = np.random.default_rng(1234)
    return [make_scene(rng, 400, 600) for _ in range(20)]


@pytest.fixture
def rng():
    return np.random.default_rng(0)
