import time
from pathlib import Path

import pytest
import yaml

from multicause.experiments import EstimateConfig, regularizer_sweep

REPO = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def estimate_config() -> EstimateConfig:
    raw = yaml.safe_load((REPO / "configs" / "estimate.yaml").read_text())
    return EstimateConfig.from_dict(raw)


@pytest.fixture(scope="session")
def estimate_sweep(estimate_config):
    """Full regularizer sweep at the repo config; shared by the estimation
    property tests and the acceptance suite (it is the expensive run)."""
    t0 = time.perf_counter()
    rows = regularizer_sweep(estimate_config)
    elapsed = time.perf_counter() - t0
    return estimate_config, rows, elapsed
