import json
import warnings
from pathlib import Path

import pytest
from hypothesis import settings

from bwalk.errors import AliasingWarning
from bwalk.kernel import build_kernel

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

ORACLES = json.loads((Path(__file__).parent / "oracles" / "oracles.json").read_text())


@pytest.fixture(scope="session")
def oracles():
    return ORACLES


@pytest.fixture(scope="session")
def k1():
    return build_kernel(1, 1.0)


@pytest.fixture(scope="session")
def k_half():
    return build_kernel(1, 0.5)


@pytest.fixture(scope="session")
def k2():
    return build_kernel(2, 1.0, R=16)


@pytest.fixture(autouse=True)
def _quiet_aliasing():
    # aliasing warnings are asserted explicitly where they matter
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", AliasingWarning)
        yield
