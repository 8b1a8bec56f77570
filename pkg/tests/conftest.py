import pathlib

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ZOO = pathlib.Path(__file__).resolve().parent.parent / "zoo"


@pytest.fixture(scope="session")
def zoo() -> pathlib.Path:
    return ZOO
