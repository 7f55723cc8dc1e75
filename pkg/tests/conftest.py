import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metricherb.models import build_hilbert, expand_projection, expand_unitary, kpartite, roots_of_unity

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.register_profile("thorough", deadline=None, max_examples=400)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ROOT = Path(__file__).resolve().parents[1]
MODELS = ROOT / "data" / "models"

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[k])


@pytest.fixture(scope="session")
def ball8():
    v0 = np.zeros(8)
    v0[0] = 0.5
    return build_hilbert(8, constants={"v0": v0})


@pytest.fixture(scope="session")
def ball2():
    return build_hilbert(2)


@pytest.fixture(scope="session")
def proj8():
    return expand_projection(build_hilbert(8), 4)


@pytest.fixture(scope="session")
def unitary8():
    return expand_unitary(build_hilbert(8, "C"), roots_of_unity(8))


@pytest.fixture(scope="session")
def k23():
    return kpartite(2, 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
