import os

import pytest

from d2dsched.model import reference_params

# campaign workers for the heavier simulation tests
WORKERS = max(1, min(2, os.cpu_count() or 1))


@pytest.fixture(scope="session")
def params64():
    return reference_params(640.0)


@pytest.fixture(scope="session")
def params16():
    return reference_params(160.0)
