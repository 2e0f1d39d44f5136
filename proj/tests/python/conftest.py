import os
import pathlib

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]


@pytest.fixture
def scenarios_dir():
    return ROOT / "scenarios"


@pytest.fixture
def apnet_cli():
    path = os.environ.get("APNET_CLI")
    if not path or not os.path.exists(path):
        pytest.skip("APNET_CLI not set")
    return path
