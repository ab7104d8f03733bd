"""Discrete random-walk model: per-site jump rates and their master equation.

Cells occupy a lattice of n sites with spacing h and jump to neighbouring
sites at rates combining volume filling (the target must have room),
adhesion (a full rear neighbour holds the cell back) and chemotaxis (jumps
up the chemoattractant gradient are favoured).  The walls are no-flux:
outward rates vanish and the rear-neighbour factor at a wall uses the
mirror value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import ChemoattractantSolver
from .grids import Field, Grid1D
from .model import ModelParams
from .stepping import Diagnostics, advance

DT_SAFETY = 0.4


@dataclass
class LatticeState:
    rho: Field
    S: Field
    t: float


@dataclass
class LatticeResult:
    states: list[LatticeState]
    diagnostics: Diagnostics


def transition_rates(
    rho: np.ndarray,
    S: np.ndarray,
    params: ModelParams,
    h: float,
    diag: Diagnostics | None = None,
):
    """Right/left jump rates (T_plus, T_minus) at every site.

    A large chemoattractant difference can make the chemotactic factor
    negative; such rates are clamped to zero (a rate cannot be negative)
    and counted in the diagnostics.
    """
    n = rho.shape[0]
    a = params.alpha
    inv_h2 = 1.0 / (h * h)

    # mirror-padded density: rho[-1] := rho[1], rho[n] := rho[n-2]
    rm = np.empty(n + 2)
    rm[1:-1] = rho
    rm[0] = rho[1]
    rm[-1] = rho[n - 2]

    fac_plus = np.empty(n)
    fac_minus = np.empty(n)
    fac_plus[:-1] = 1.0 + 0.5 * params.chi0 * (S[1:] - S[:-1])
    fac_plus[-1] = 0.0
    fac_minus[1:] = 1.0 + 0.5 * params.chi0 * (S[:-1] - S[1:])
    fac_minus[0] = 0.0

    if diag is not None:
        diag.clamp_events += int(np.sum(fac_plus[:-1] < 0.0))
        diag.clamp_events += int(np.sum(fac_minus[1:] < 0.0))
    np.maximum(fac_plus, 0.0, out=fac_plus)
    np.maximum(fac_minus, 0.0, out=fac_minus)

    t_plus = np.zeros(n)
    t_minus = np.zeros(n)
    # T+_i needs rho_{i+1} (volume filling) and rho_{i-1} (adhesion)
    t_plus[:-1] = inv_h2 * (1.0 - rho[1:]) * (1.0 - a * rm[:-3]) * fac_plus[:-1]
    t_minus[1:] = inv_h2 * (1.0 - rho[:-1]) * (1.0 - a * rm[3:]) * fac_minus[1:]
    return t_plus, t_minus


def master_rhs(
    rho: np.ndarray,
    S: np.ndarray,
    params: ModelParams,
    h: float,
    diag: Diagnostics | None = None,
) -> np.ndarray:
    """Flux-form master-equation right-hand side; sums to zero exactly."""
    t_plus, t_minus = transition_rates(rho, S, params, h, diag)
    # net rightward exchange across each edge (i, i+1)
    edge = t_plus[:-1] * rho[:-1] - t_minus[1:] * rho[1:]
    rhs = np.empty_like(rho)
    rhs[0] = -edge[0]
    rhs[1:-1] = edge[:-1] - edge[1:]
    rhs[-1] = edge[-1]
    return rhs


def lattice_stable_dt(
    rho: np.ndarray, S: np.ndarray, params: ModelParams, h: float
) -> float:
    """Explicit-step bound from the largest jump rate (diffusive scaling)."""
    t_plus, t_minus = transition_rates(rho, S, params, h)
    max_rate = max(float(np.max(t_plus)), float(np.max(t_minus)), 1e-300)
    return DT_SAFETY / (4.0 * max_rate)


def simulate_lattice(
    initial: Field,
    params: ModelParams,
    t_end: float,
    snapshot_times,
    *,
    method: str = "rk2",
) -> LatticeResult:
    """Integrate the master equation, re-solving the chemoattractant each step."""
    rho0 = initial.values
    if np.any(rho0 < 0.0) or np.any(rho0 > 1.0):
        raise ValueError("initial densities must lie in [0, 1]")
    grid = initial.grid
    if abs(grid.L - params.L) > 1e-12 * params.L:
        raise ValueError("grid length does not match params.L")
    solver = ChemoattractantSolver(grid)
    h = grid.h

    def rhs(r, s, diag):
        return master_rhs(r, s, params, h, diag)

    def dt_fn(r, s):
        return lattice_stable_dt(r, s, params, h)

    snaps, _, diag = advance(
        rho0, grid, t_end, snapshot_times, rhs, dt_fn, solver, method=method
    )
    states = [
        LatticeState(Field(grid, r), Field(grid, s), t) for t, r, s in snaps
    ]
    return LatticeResult(states, diag)
