import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

ROOT = Path(__file__).resolve().parents[1]
for p in (ROOT / "src",):
    if p.exists() and str(p) not in sys.path:
        sys.path.insert(0, str(p))

from scalewave.series.panel import StockPanel  # noqa: E402


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: multi-seed reproductions, skipped unless --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_panel():
    """3 stocks x 2 features (close, volume) x 10 business days, positive prices."""
    calendar = pd.bdate_range("2021-01-04", periods=10)
    close = np.array([
        [10.0, 10.5, 10.2, 10.8, 11.0, 10.9, 11.3, 11.1, 11.6, 12.0],
        [20.0, 19.5, 19.8, 20.4, 20.1, 20.6, 21.0, 20.7, 20.9, 21.5],
        [5.0, 5.1, 5.3, 5.2, 5.4, 5.6, 5.5, 5.7, 5.9, 5.8],
    ])
    volume = np.arange(30, dtype=float).reshape(3, 10) * 100.0 + 1000.0
    return StockPanel(("AAA", "BBB", "CCC"), calendar, np.stack([close, volume], axis=1), ("close", "volume"))
