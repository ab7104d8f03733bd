import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from celltaxis.elliptic import ChemoattractantSolver, solve_chemoattractant
from celltaxis.grids import Field, Grid1D


def eigenmode_error(n: int, k: int = 2, L: float = 8.0) -> float:
    grid = Grid1D(n, L)
    x = grid.x
    q2 = (k * math.pi / L) ** 2
    rho = 0.4 + 0.1 * np.cos(k * math.pi * x / L)
    exact = 0.4 + 0.1 * np.cos(k * math.pi * x / L) / (1.0 + q2)
    S = ChemoattractantSolver(grid).solve_values(rho)
    return float(np.max(np.abs(S - exact)))


class TestSolve:
    def test_constants_are_fixed_points(self):
        grid = Grid1D(173, 5.0)
        S = solve_chemoattractant(Field(grid, np.full(grid.n, 0.37)))
        assert np.allclose(S.values, 0.37, atol=1e-13)

    def test_cosine_eigenmode_second_order(self):
        e200, e400 = eigenmode_error(200), eigenmode_error(400)
        assert 3.5 <= e200 / e400 <= 4.5

    def test_unit_interval_preserved(self):
        rng = np.random.default_rng(3)
        grid = Grid1D(101, 8.0)
        solver = ChemoattractantSolver(grid)
        for _ in range(20):
            rho = rng.random(grid.n)
            S = solver.solve_values(rho)
            assert S.min() >= 0.0 - 1e-12 and S.max() <= 1.0 + 1e-12

    @given(
        hnp.arrays(
            np.float64,
            st.integers(3, 120),
            elements=st.floats(0.0, 1.0, allow_nan=False),
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_discrete_maximum_principle(self, rho):
        grid = Grid1D(rho.shape[0], 4.0)
        S = ChemoattractantSolver(grid).solve_values(rho)
        assert S.min() >= rho.min() - 1e-11
        assert S.max() <= rho.max() + 1e-11

    def test_trapezoid_mean_preserved(self):
        # integrating the equation with no-flux walls equates the means;
        # the mirror-closed solve reproduces that to round-off
        rng = np.random.default_rng(11)
        for n in (50, 100, 200):
            grid = Grid1D(n, 8.0)
            rho = rng.random(n)
            S = ChemoattractantSolver(grid).solve_values(rho)
            a = np.trapezoid(S, dx=grid.h)
            b = np.trapezoid(rho, dx=grid.h)
            assert a == pytest.approx(b, abs=1e-11)

    def test_step_function_regularity(self):
        # discrete second differences obey |Lap_h S| = |S - rho| <= osc(rho)
        grid = Grid1D(400, 8.0)
        rho = np.where(grid.x < 4.0, 0.0, 1.0)
        S = ChemoattractantSolver(grid).solve_values(rho)
        h = grid.h
        second = (S[2:] - 2 * S[1:-1] + S[:-2]) / (h * h)
        assert np.max(np.abs(second)) <= 1.0 + 1e-10

    def test_grid_mismatch_rejected(self):
        solver = ChemoattractantSolver(Grid1D(50, 8.0))
        with pytest.raises(ValueError):
            solver.solve(Field(Grid1D(60, 8.0), np.zeros(60)))

    def test_gradient_zero_at_walls(self):
        grid = Grid1D(80, 8.0)
        solver = ChemoattractantSolver(grid)
        S = solver.solve_values(np.linspace(0.0, 1.0, grid.n))
        g = solver.gradient_values(S)
        assert g[0] == 0.0 and g[-1] == 0.0
