import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypocontrast import get_model, known_models

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(params=list(known_models()))
def builtin(request):
    return get_model(request.param)


def random_thetas(model, n, seed=0):
    rng = np.random.default_rng(seed)
    return rng.uniform(model.layout.lo_array, model.layout.hi_array, size=(n, model.layout.size))


def random_states(model, n, seed=0, scale=1.5):
    return np.random.default_rng(seed).normal(scale=scale, size=(n, model.mclass.N))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        passed, detail = RESULTS[num]
        terminalreporter.write_line(f"criterion {num:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
