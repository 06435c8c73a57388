import json
import shutil
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parents[1]
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

from hyperaccel_engine.core import catalogs_for  # noqa: E402
from hyperaccel_engine.settings import Settings  # noqa: E402

SEEDS = (0, 1, 7)

# every recurrence id in the shipped catalog
CATALOG_IDS = [r["id"] for r in json.loads((REPO_ROOT / "data" / "recurrences.json").read_text(encoding="utf-8"))["recurrences"]]


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running numeric checks")


@pytest.fixture(scope="session")
def data_dir(tmp_path_factory) -> Path:
    # tests that write catalogs write into this copy
    target = tmp_path_factory.mktemp("catalogs") / "data"
    shutil.copytree(REPO_ROOT / "data", target)
    return target


@pytest.fixture(scope="session")
def settings(data_dir) -> Settings:
    return Settings(data_dir=data_dir)


@pytest.fixture(scope="session")
def catalogs(settings):
    return catalogs_for(settings.data_dir)


@pytest.fixture(scope="session")
def recurrences(catalogs):
    return catalogs[0]


@pytest.fixture(scope="session")
def identities(catalogs):
    return catalogs[1]


@pytest.fixture(scope="session")
def store(catalogs):
    return catalogs[2]


@pytest.fixture(params=SEEDS)
def seed(request) -> int:
    return request.param
