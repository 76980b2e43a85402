from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mela.core import SeedStream


@pytest.fixture
def stream() -> SeedStream:
    return SeedStream(12345)
