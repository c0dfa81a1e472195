import pathlib

import pytest

from uavcov.params import load_config

BASELINE = pathlib.Path(__file__).resolve().parent.parent / "configs" / "baseline.cfg"


@pytest.fixture(scope="session")
def baseline_path() -> pathlib.Path:
    return BASELINE


@pytest.fixture(scope="session")
def baseline():
    return load_config(BASELINE)
