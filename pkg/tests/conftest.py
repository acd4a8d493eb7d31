import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from holopulse.io import TemporalStack


@pytest.fixture
def rng():
    return np.random.default_rng(20240612)


def make_stack(data, frame_rate=None) -> TemporalStack:
    return TemporalStack(data=np.asarray(data, dtype=np.float32), frame_rate=frame_rate)
