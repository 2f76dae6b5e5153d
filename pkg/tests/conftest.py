from pathlib import Path

import numpy as np
import pytest

from megascatter import PointTable, build_index, ingest_csv

REPO_ROOT = Path(__file__).resolve().parent.parent
DEMO_CSV = REPO_ROOT / "data" / "demo_cities.csv"


def random_table(n: int, seed: int = 0, lo: float = -100.0, hi: float = 100.0) -> PointTable:
    rng = np.random.default_rng(seed)
    return PointTable(x=rng.uniform(lo, hi, n), y=rng.uniform(lo, hi, n))


@pytest.fixture(scope="session")
def demo_table():
    with open(DEMO_CSV, "rb") as fh:
        return ingest_csv(fh, "Longitude", "Latitude")


@pytest.fixture(scope="session")
def demo_index(demo_table):
    return build_index(demo_table)
