import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from syncq.dists import (
    DeterministicSize, ExponentialService, MixedPoissonPareto, ServiceModel,
    UniformService,
)
from syncq.limit import LimitParams

EN2 = MixedPoissonPareto(3.0, 2.0 / 3.0)
EN10 = MixedPoissonPareto(3.0, 6.0)
U01 = ServiceModel(UniformService(0.0, 1.0))


@pytest.fixture
def mm1_params() -> LimitParams:
    """Single-piece jobs with unit-rate exponential service at lambda* = 0.5."""
    return LimitParams(DeterministicSize(1), ServiceModel(ExponentialService(1.0)), 0.5)


@pytest.fixture
def en2_light() -> LimitParams:
    """Mean-2 heavy-tailed sizes, U(0,1) services, light load lambda = 0.05."""
    return LimitParams(EN2, U01, 0.05)


def assert_within(value, target, tol, label=""):
    assert abs(value - target) <= tol, f"{label}: {value} not within {tol} of {target}"
