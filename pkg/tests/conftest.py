import sys
from pathlib import Path

import numpy as np
import pytest

from weaksync import _kernel

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parents[1]
SCENARIOS = ROOT / "scenarios"


@pytest.fixture(params=sorted(_kernel.AVAILABLE))
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def scenarios_dir():
    return SCENARIOS
