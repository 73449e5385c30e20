import numpy as np
import pytest

from veclidar import backend


@pytest.fixture(params=["compiled", "python"])
def kernel_backend(request):
    """Run a test under each kernel backend."""
    if request.param == "compiled" and not backend.has_compiled():
        pytest.skip("compiled extension not built")
    backend.use(request.param)
    yield request.param
    backend.use("auto")


@pytest.fixture(autouse=True)
def _reset_backend():
    yield
    backend.use("auto")


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_directions(rng, n):
    d = rng.normal(size=(n, 3))
    return d / np.linalg.norm(d, axis=1, keepdims=True)
