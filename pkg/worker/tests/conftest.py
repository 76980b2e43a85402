from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from wire import WireClient


@pytest.fixture
def client():
    c = WireClient()
    assert c.hello()["ok"]
    yield c
    c.kill()
