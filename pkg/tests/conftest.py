from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).resolve().parents[1] / "data"
IRIS = DATA / "iris.data"
MNIST_IMAGES = DATA / "mnist36-images-idx3-ubyte.gz"
MNIST_LABELS = DATA / "mnist36-labels-idx1-ubyte.gz"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_state(rng, n):
    from qaml.sim import StateVector

    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return StateVector(v / np.linalg.norm(v))


@pytest.fixture(scope="session")
def iris_split():
    from qaml.data import prepare_iris

    return prepare_iris(IRIS)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def acceptance(request):
    """``report(n, ok, detail)`` records one criterion verdict for the summary."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def report(n, ok, detail):
        results[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
