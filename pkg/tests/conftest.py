import functools

import numpy as np
import pytest

from hitseries.grid import make_uniform_grid
from hitseries.hitting import DomainSpec, mc_hit_probability
from hitseries.presets import identity_preset, partial_bridge


@functools.lru_cache(maxsize=None)
def cached_mc(preset: str, beta: float, x: float, n_cells: int, n_paths: int, seed: int = 2024, bridge: bool = True, drift: float | None = None):
    """Monte Carlo estimates shared between module tests and the acceptance suite."""
    grid = make_uniform_grid(n_cells)
    p = identity_preset(grid) if preset == "identity" else partial_bridge(grid, beta)
    return mc_hit_probability(
        p.model(), DomainSpec(), x, n_paths=n_paths, seed=seed, bridge_correction=bridge, drift=drift
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def grid256():
    return make_uniform_grid(256)


# Acceptance criteria record one line each; printed in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, passed: bool, message: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {message}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
