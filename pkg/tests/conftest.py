import numpy as np
import pytest

from virann.virmod import ModuleParams, build_module


@pytest.fixture(scope="session")
def mod12():
    """Workhorse module: c=2, h=0.5, N=12 (no null vectors at any level)."""
    return build_module(ModuleParams(2.0, 0.5, 12))


@pytest.fixture(scope="session")
def mod14():
    # tighter nulltol: at level >= 13 genuine normalized gram eigenvalues
    # sink below the 1e-9 default and would be misread as null directions
    return build_module(ModuleParams(2.0, 0.5, 14), nulltol=1e-12)


@pytest.fixture(scope="session")
def mod8():
    return build_module(ModuleParams(2.0, 0.5, 8))


@pytest.fixture(scope="session")
def mod10():
    return build_module(ModuleParams(2.0, 0.5, 10))


@pytest.fixture(scope="session")
def mod6():
    """Small module for solver-heavy suites."""
    return build_module(ModuleParams(2.0, 0.5, 6))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260814)
