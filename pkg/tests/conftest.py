import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vulngraph import catalog as cat_mod
from vulngraph import fixtures, timeline as tl_mod


@pytest.fixture(scope="session")
def openplc_catalog():
    return cat_mod.load_catalog(fixtures.openplc_catalog_path())


@pytest.fixture(scope="session")
def openplc_timeline():
    return tl_mod.load_timeline(fixtures.openplc_timeline_path())


@pytest.fixture(scope="session")
def openplc_snapshots(openplc_timeline, openplc_catalog):
    return {
        label: tl_mod.epoch_snapshot(openplc_timeline, openplc_catalog, label)
        for label in ("V1", "V2", "V3")
    }
