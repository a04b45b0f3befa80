import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from anavi import dataset, mapgen, predictor

settings.register_profile("anavi", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("anavi")


@pytest.fixture(scope="session")
def tworoom():
    return mapgen.two_room()


@pytest.fixture(scope="session")
def freefield():
    return mapgen.free_field()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def tworoom_pano(tworoom):
    """vis_pano trained on the two-room fixture (about a minute on one core)."""
    train = dataset.arrays(list(dataset.generate([tworoom], 2000, seed=1)), "pano")
    val = dataset.arrays(list(dataset.generate([tworoom], 300, seed=2)), "pano")
    model, _ = predictor.train("vis_pano", predictor.TrainConfig(epochs=30, seed=0), train, val)
    return model


CRITERIA = {}


def record_criterion(num, ok, detail):
    CRITERIA[num] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        ok, detail = CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
