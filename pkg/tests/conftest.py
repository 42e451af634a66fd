"""
Shared fixtures for the ResShift test suite
"""

import numpy as np
import pytest

from resshift.core.predictor import reference_layout
from resshift.core.schedule import PRESETS, Schedule, build_schedule


@pytest.fixture
def resshift_schedule() -> Schedule:
    """T=15, p=0.3, kappa=2"""
    return build_schedule(PRESETS["resshift"])


@pytest.fixture
def short_schedule() -> Schedule:
    """T=4, p=0.3, kappa=2"""
    return build_schedule(PRESETS["resshift-l"])


@pytest.fixture
def ldm_schedule() -> Schedule:
    return build_schedule(PRESETS["ldm"])


@pytest.fixture
def worked_schedule() -> Schedule:
    """eta = (0.1, 0.2, 0.999), kappa = 2: alpha_1 = 0.1 and the t=2 worked numbers"""
    return Schedule.from_sequence([0.1, 0.2, 0.999], kappa=2.0)


@pytest.fixture
def tiny_layout():
    return reference_layout(channels=1, hidden_width=4, t_embed_dim=4, first_kernel=3)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


@pytest.fixture(autouse=True)
def _isolated_home(tmp_path, monkeypatch):
    """Keep RESSHIFT_* settings from the developer's shell out of the tests"""
    monkeypatch.setenv("RESSHIFT_HOME", str(tmp_path / "home"))
    monkeypatch.setenv("RESSHIFT_THREADS", "1")
    monkeypatch.delenv("RESSHIFT_LOG_LEVEL", raising=False)
