import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from volharness import kernels


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger one-time JIT compilation so timed tests measure steady state."""
    flat = np.array([0.5, -0.5, 1.0])
    offsets = np.array([0, 3], dtype=np.int64)
    kernels.batch_day_measures(flat, offsets, 4, True)
    scores = np.ones((4, 2))
    kernels.nw_s_matrix(scores, np.array([0, 4], dtype=np.int64), 2)
