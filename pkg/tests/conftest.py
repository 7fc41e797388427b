import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def frozen():
    import oracles
    return oracles.frozen()


@pytest.fixture(scope="session")
def doubling():
    from zoomtherm.dynamics import builtin_map
    return builtin_map("doubling")


@pytest.fixture(scope="session")
def quadratic():
    from zoomtherm.dynamics import builtin_map
    return builtin_map("quadratic", {"a": 2.0})
