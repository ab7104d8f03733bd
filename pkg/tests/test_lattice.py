import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from celltaxis.elliptic import ChemoattractantSolver
from celltaxis.grids import Field, Grid1D
from celltaxis.lattice import (
    lattice_stable_dt,
    master_rhs,
    simulate_lattice,
    transition_rates,
)
from celltaxis.model import ModelParams
from celltaxis.stepping import Diagnostics


def P(alpha=0.95, chi0=16.0, L=8.0):
    return ModelParams(alpha=alpha, chi0=chi0, L=L)


def random_state(n, seed, lo=0.0, hi=1.0):
    rng = np.random.default_rng(seed)
    grid = Grid1D(n, 8.0)
    rho = rng.uniform(lo, hi, n)
    S = ChemoattractantSolver(grid).solve_values(rho)
    return grid, rho, S


def literal_master_rhs(rho, S, params, h):
    """Straight transcription of the master equation, node by node."""
    t_plus, t_minus = transition_rates(rho, S, params, h)
    n = rho.shape[0]
    out = np.zeros(n)
    for i in range(n):
        gain = 0.0
        if i > 0:
            gain += t_plus[i - 1] * rho[i - 1]
        if i < n - 1:
            gain += t_minus[i + 1] * rho[i + 1]
        out[i] = gain - (t_plus[i] + t_minus[i]) * rho[i]
    return out


class TestRates:
    def test_uniform_state_symmetric(self):
        grid = Grid1D(60, 8.0)
        rho = np.full(grid.n, 0.4)
        S = np.full(grid.n, 0.4)
        t_plus, t_minus = transition_rates(rho, S, P(), grid.h)
        assert np.allclose(t_plus[1:-1], t_minus[1:-1], atol=1e-14)
        assert t_minus[0] == 0.0 and t_plus[-1] == 0.0

    def test_volume_filling_blocks_jump(self):
        grid, rho, S = random_state(40, 0)
        rho[21] = 1.0
        t_plus, _ = transition_rates(rho, S, P(), grid.h)
        assert t_plus[20] == 0.0

    def test_full_adhesion_to_saturated_rear_neighbour(self):
        grid, rho, S = random_state(40, 1, hi=0.9)
        rho[19] = 1.0
        t_plus, _ = transition_rates(rho, S, P(alpha=1.0), grid.h)
        assert t_plus[20] == pytest.approx(0.0, abs=1e-14)

    def test_clamping_matches_defining_condition(self):
        # rates clamp exactly when |dS| exceeds 2/chi0 in the adverse direction
        grid = Grid1D(50, 8.0)
        rng = np.random.default_rng(5)
        rho = rng.uniform(0.1, 0.9, grid.n)
        S = np.cumsum(rng.uniform(-0.3, 0.3, grid.n))  # synthetic steep signal
        params = P(chi0=16.0)
        diag = Diagnostics()
        transition_rates(rho, S, params, grid.h, diag)
        dS = np.diff(S)
        expected = int(np.sum(1.0 + 0.5 * params.chi0 * dS < 0.0)) + int(
            np.sum(1.0 - 0.5 * params.chi0 * dS < 0.0)
        )
        assert expected > 0
        assert diag.clamp_events == expected


class TestMasterRhs:
    def test_uniform_is_stationary(self):
        grid = Grid1D(64, 8.0)
        rho = np.full(grid.n, 0.55)
        S = ChemoattractantSolver(grid).solve_values(rho)
        assert np.max(np.abs(master_rhs(rho, S, P(), grid.h))) < 1e-12

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_flux_form_matches_literal_master_equation(self, seed):
        grid, rho, S = random_state(37, seed)
        got = master_rhs(rho, S, P(alpha=0.8, chi0=4.0), grid.h)
        want = literal_master_rhs(rho, S, P(alpha=0.8, chi0=4.0), grid.h)
        assert np.allclose(got, want, atol=1e-9)

    @given(st.integers(0, 1000))
    @settings(max_examples=25, deadline=None)
    def test_rhs_sums_to_zero(self, seed):
        grid, rho, S = random_state(83, seed)
        rhs = master_rhs(rho, S, P(), grid.h)
        scale = np.max(np.abs(rhs)) + 1.0
        assert abs(np.sum(rhs)) < 1e-10 * scale

    def test_pairwise_exchange_conserves_the_pair(self):
        # the shared edge's exchange cancels in the pair total: the pair's
        # mass changes only through its two outer edges
        grid, rho, S = random_state(30, 9)
        params = P(alpha=0.7, chi0=4.0)
        rhs = master_rhs(rho, S, params, grid.h)
        t_plus, t_minus = transition_rates(rho, S, params, grid.h)
        i = 14
        j_left = t_plus[i - 1] * rho[i - 1] - t_minus[i] * rho[i]
        j_right = t_plus[i + 1] * rho[i + 1] - t_minus[i + 2] * rho[i + 2]
        assert rhs[i] + rhs[i + 1] == pytest.approx(j_left - j_right, abs=1e-10)

    def test_isolated_pair_is_closed(self):
        # empty lattice apart from one adjacent pair; a synthetic signal
        # step clamps the pair's outward rates to zero, so only the shared
        # edge is active and the pair total is exactly conserved
        grid = Grid1D(30, 8.0)
        rho = np.zeros(grid.n)
        rho[14], rho[15] = 0.3, 0.6
        S = np.zeros(grid.n)
        S[14:16] = 0.5  # adverse steps at both outer edges
        params = P(alpha=0.5, chi0=16.0)
        rhs = master_rhs(rho, S, params, grid.h)
        assert abs(rhs[14]) > 0.0
        assert rhs[14] + rhs[15] == pytest.approx(0.0, abs=1e-12)
        mask = np.ones(grid.n, bool)
        mask[[14, 15]] = False
        assert np.max(np.abs(rhs[mask])) < 1e-12


class TestSimulate:
    def test_constant_initial_stays_constant(self):
        grid = Grid1D(41, 8.0)
        res = simulate_lattice(Field(grid, np.full(grid.n, 0.5)), P(), 0.5, [0.5])
        assert np.allclose(res.states[-1].rho.values, 0.5, atol=1e-12)

    def test_mass_conservation(self):
        grid = Grid1D(101, 8.0)
        rho0 = 0.3 + 0.2 * np.exp(-((grid.x - 4.0) ** 2))
        res = simulate_lattice(Field(grid, rho0), P(), 0.5, [0.5])
        assert res.diagnostics.rel_mass_drift <= 1e-10

    def test_bounds_maintained(self):
        grid = Grid1D(101, 8.0)
        rho0 = 0.3 + 0.2 * np.exp(-((grid.x - 4.0) ** 2))
        res = simulate_lattice(Field(grid, rho0), P(alpha=0.5, chi0=8.0), 0.5, [0.5])
        assert res.diagnostics.bound_violations == 0
        assert res.diagnostics.rho_min_seen >= 0.0
        assert res.diagnostics.rho_max_seen <= 1.0

    def test_plain_diffusion_relaxes_to_uniform(self):
        params = ModelParams(alpha=0.0, chi0=0.0, L=2.0)
        grid = Grid1D(51, 2.0)
        rho0 = 0.4 + 0.2 * np.cos(np.pi * grid.x / 2.0)
        res = simulate_lattice(Field(grid, rho0), params, 6.0, [6.0])
        rho = res.states[-1].rho.values
        rho_bar = np.mean(rho)
        assert np.max(np.abs(rho - rho_bar)) < 1e-6

    def test_snapshots_at_requested_times(self):
        grid = Grid1D(41, 8.0)
        times = [0.0, 0.123, 0.25]
        res = simulate_lattice(Field(grid, np.full(grid.n, 0.4)), P(), 0.25, times)
        assert [s.t for s in res.states] == times

    def test_rejects_out_of_range_initial(self):
        grid = Grid1D(41, 8.0)
        bad = np.full(grid.n, 0.5)
        bad[3] = 1.2
        with pytest.raises(ValueError):
            simulate_lattice(Field(grid, bad), P(), 0.1, [])

    def test_stable_dt_positive_and_diffusive_scale(self):
        grid, rho, S = random_state(80, 2)
        dt = lattice_stable_dt(rho, S, P(), grid.h)
        assert 0.0 < dt < grid.h * grid.h
