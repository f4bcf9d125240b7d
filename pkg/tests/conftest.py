"""
Shared pytest configuration: the --runslow switch for desk-scale acceptance runs.
"""

import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))


def pytest_addoption(parser):
    parser.addoption('--runslow', action='store_true', default=False,
                     help='Run desk-scale acceptance tests (tens of minutes)')


def pytest_configure(config):
    config.addinivalue_line('markers', 'slow: desk-scale acceptance run, needs --runslow')


def pytest_collection_modifyitems(config, items):
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)
