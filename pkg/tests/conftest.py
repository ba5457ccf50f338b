"""Shared fixtures: the expensive standard-suite runs are session-scoped."""

import numpy as np
import pytest

from hyperflow.curves import wiggled_circle
from hyperflow.flow import FlowConfig, run


@pytest.fixture(scope="session")
def deep_m1_run():
    """Reference relaxation: unit circle with a 5% mode-3 wiggle, m = 1.

    Dense trace (every step) and periodic snapshots; converges to the unit
    circle with the gradient at the evaluation floor.
    """
    cfg = FlowConfig(
        m=1,
        n_vertices=128,
        dt_max=5e-4,
        tol_grad=5e-9,
        t_max=20.0,
        sample_every=1,
        snapshot_every=250,
    )
    result = run(wiggled_circle(128, mode=3, amplitude=0.05), cfg)
    assert result.converged
    return result


@pytest.fixture(scope="session")
def short_m1_run():
    """Cheaper run for smoke-level consumers."""
    cfg = FlowConfig(
        m=1,
        n_vertices=64,
        dt_max=5e-4,
        tol_grad=1e-7,
        t_max=10.0,
        sample_every=1,
        snapshot_every=200,
    )
    result = run(wiggled_circle(64, mode=3, amplitude=0.05), cfg)
    assert result.converged
    return result
