import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "repo", deadline=None, derandomize=True, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large],
)
settings.load_profile("repo")


@pytest.fixture(scope="session")
def balls():
    from lipfree import FreeAbelian, FreeGroup, FreeProductCyclic, build_ball

    return {
        "Z": build_ball(FreeAbelian(1), 8),
        "Z2": build_ball(FreeAbelian(2), 6),
        "F2": build_ball(FreeGroup(2), 6),
        "Z2*Z2*Z2": build_ball(FreeProductCyclic([2, 2, 2]), 5),
    }


@pytest.fixture(scope="session")
def systems(balls):
    from lipfree import BasisSystem

    return {k: BasisSystem.from_ball(b) for k, b in balls.items()}
