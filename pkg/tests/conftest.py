"""Shared fixtures: backend selection and a few small reference states."""

import numpy as np
import pytest

from bornlab import kernels


def _lanes():
    lanes = ["numpy"]
    try:
        kernels.use_backend("numba")
        lanes.append("numba")
    except RuntimeError:
        pass
    finally:
        kernels.use_backend("numpy")
    return lanes


_AVAILABLE = _lanes()


@pytest.fixture(params=_AVAILABLE)
def lane(request):
    """Run the test once per available kernel lane, restoring afterwards."""
    previous = kernels.backend()
    kernels.use_backend(request.param)
    yield request.param
    kernels.use_backend(previous)


@pytest.fixture(autouse=True)
def _default_lane():
    # keep tests deterministic regardless of execution order
    previous = kernels.backend()
    yield
    kernels.use_backend(previous)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def rel(a: float, b: float) -> float:
    """Relative gap with an absolute floor of one.

    Quantities under test are order one in atomic units, so the floor
    keeps near-zero comparisons meaningful instead of dividing noise
    by noise.
    """
    return abs(a - b) / max(1.0, abs(a), abs(b))
