import math

import numpy as np
import pytest
from hypothesis import settings

from hybrid_floquet import (
    DomainDef,
    FloquetExampleParams,
    GuardDef,
    HybridSystemDef,
    StepperConfig,
    find_fixed_point,
    hopper_section,
    make_floquet_example,
    make_hopper,
    periodic_orbit,
)

settings.register_profile("repo", deadline=None, derandomize=True, max_examples=60)
settings.load_profile("repo")


def free_fall_system(g: float = 2.0) -> HybridSystemDef:
    """(y, v) falling under gravity g; the ground guard bounces with restitution 0.5."""
    dom = DomainDef("fall", 2, ("y", "v"), lambda s: np.array([s[1], -g]))
    guard = GuardDef("ground", "fall", "fall", lambda s: s[0], lambda s: np.array([0.0, -0.5 * s[1]]))
    return HybridSystemDef((dom,), (guard,), name="free_fall")


@pytest.fixture(scope="session")
def cfg():
    return StepperConfig()


@pytest.fixture(scope="session")
def hopper():
    return make_hopper()


@pytest.fixture(scope="session")
def hopper_orbit(hopper, cfg):
    sec = hopper_section()
    u_star, _ = find_fixed_point(hopper, sec, [2.0, 2.0], cfg)
    return periodic_orbit(hopper, sec, u_star, cfg)


@pytest.fixture(scope="session")
def ex1():
    p = FloquetExampleParams()
    return p, make_floquet_example(p)


@pytest.fixture
def fall():
    return free_fall_system()


E1 = math.exp(-1.0)
