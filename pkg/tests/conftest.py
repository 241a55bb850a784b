import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from hullplan.transforms import Pose  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)


def random_pose(rng, span: float = 1.0) -> Pose:
    q = rng.normal(size=4)
    return Pose(rng.uniform(-span, span, 3), q / np.linalg.norm(q))


@pytest.fixture
def pure_kernels(monkeypatch):
    """Swap in the numpy fallback kernels for the duration of a test."""
    import importlib
    core_mod = importlib.import_module("hullplan.hull.core")
    qh_mod = importlib.import_module("hullplan.hull.quickhull")
    from hullplan.hull.backend import get_backend
    fallback = get_backend("python")
    monkeypatch.setattr(core_mod, "kernels", fallback)
    monkeypatch.setattr(qh_mod, "kernels", fallback)
    return fallback
