"""Shared fixtures.

The heavyweight benchmark runs (n up to 1200, fig-style schedules) are
session-scoped so the acceptance criteria that share them pay for each
run once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from celltaxis.continuum import SimResult, simulate_continuum
from celltaxis.grids import Field, Grid1D
from celltaxis.lattice import LatticeResult, simulate_lattice
from celltaxis.model import ModelParams
from celltaxis.stefan import StefanResult, insert_spike, simulate_stefan

BENCH_PARAMS = ModelParams(alpha=0.95, chi0=16.0, L=8.0)
BENCH_FINAL_TIME = {400: 7.0, 800: 7.6, 1200: 9.344}
COMPARE_TIMES = [2.0, 4.0, 6.0, 8.0, 9.344]


def bench_bell(grid: Grid1D) -> Field:
    """The documented bell profile shared by the aggregation benchmarks."""
    x = grid.x
    return Field(grid, 0.2 + 0.05 * np.exp(-((x - 4.0) ** 2) / (2 * 0.8**2)))


def onset_top_hat(grid: Grid1D) -> Field:
    """Flat-topped profile used for the oscillation-onset study."""
    x = grid.x
    return Field(grid, 0.2 + 0.1 * np.exp(-(((x - 4.0) / 1.8) ** 4)))


@dataclass
class BenchRun:
    n: int
    result: SimResult


def _continuum_bench(n: int) -> BenchRun:
    grid = Grid1D(n, 8.0)
    t_end = BENCH_FINAL_TIME[n]
    times = [t for t in COMPARE_TIMES if t <= t_end] + [t_end]
    times = sorted(set(times))
    res = simulate_continuum(
        bench_bell(grid), BENCH_PARAMS, t_end, times, track_onset=True
    )
    return BenchRun(n, res)


@pytest.fixture(scope="session")
def bench400() -> BenchRun:
    return _continuum_bench(400)


@pytest.fixture(scope="session")
def bench800() -> BenchRun:
    return _continuum_bench(800)


@pytest.fixture(scope="session")
def bench1200() -> BenchRun:
    return _continuum_bench(1200)


@pytest.fixture(scope="session")
def onset_runs() -> dict[int, SimResult]:
    out = {}
    for n in (400, 800, 1200):
        grid = Grid1D(n, 8.0)
        out[n] = simulate_continuum(
            onset_top_hat(grid), BENCH_PARAMS, 2.6, [], track_onset=True
        )
    return out


@pytest.fixture(scope="session")
def lattice_bench() -> LatticeResult:
    grid = Grid1D(400, 8.0)
    return simulate_lattice(bench_bell(grid), BENCH_PARAMS, 7.0, [0.0, 3.5, 7.0])


@pytest.fixture(scope="session")
def hit1200():
    grid = Grid1D(1200, 8.0)
    res = simulate_continuum(
        bench_bell(grid), BENCH_PARAMS, 3.0, [], stop_on_hit=True
    )
    assert res.hit is not None, "benchmark datum must reach the unstable interval"
    return res


@pytest.fixture(scope="session")
def stefan_bench(hit1200) -> StefanResult:
    grid = hit1200.hit_state.rho.grid
    decomp = insert_spike(hit1200.hit_state, hit1200.hit, BENCH_PARAMS)
    times = [t for t in COMPARE_TIMES if t > hit1200.hit.t_c]
    return simulate_stefan(decomp, BENCH_PARAMS, 9.344, times, grid)
