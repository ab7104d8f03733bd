"""Method-of-lines solver for the continuum advection-diffusion limit.

The diffusion term is discretised by switching the chemotaxis factor off
in the lattice master equation (which builds the nonlinear diffusivity in
automatically), while the chemotactic flux is discretised with first-order
upwinding in conservative flux form.  Both pieces telescope, so the scheme
conserves the discrete mass h*sum(rho) to round-off even in ill-posed
regimes, where the grid-scale oscillations it develops are the object of
study rather than a numerical defect.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import linregress

from .elliptic import ChemoattractantSolver
from .grids import Field, Grid1D
from .model import ModelParams, diffusivity_unchecked, unstable_interval
from .stepping import Diagnostics, advance

DT_SAFETY = 0.4
_EPS = 1e-300


@dataclass
class SimState:
    rho: Field
    S: Field
    t: float
    diagnostics: dict = field(default_factory=dict)

    def mass(self) -> float:
        return self.rho.discrete_mass()


@dataclass(frozen=True)
class HitEvent:
    """First contact of the density with the lower edge of the unstable interval."""

    x_c: float
    t_c: float
    node: int


@dataclass
class SimResult:
    states: list[SimState]
    hit: HitEvent | None
    hit_state: SimState | None
    diagnostics: Diagnostics


def continuum_rhs(
    rho: np.ndarray,
    S: np.ndarray,
    params: ModelParams,
    h: float,
    diag: Diagnostics | None = None,
) -> np.ndarray:
    """Flux-form right-hand side: master-equation diffusion + upwind chemotaxis."""
    n = rho.shape[0]
    a = params.alpha
    inv_h2 = 1.0 / (h * h)

    rm = np.empty(n + 2)
    rm[1:-1] = rho
    rm[0] = rho[1]
    rm[-1] = rho[n - 2]

    # diffusive exchange across edge (i, i+1): rates with the chemotaxis
    # factor switched off
    left, right = rm[1:-1][:-1], rm[1:-1][1:]
    diff_edge = inv_h2 * (
        (1.0 - right) * (1.0 - a * rm[:-3]) * left
        - (1.0 - left) * (1.0 - a * rm[3:]) * right
    )

    # chemotactic flux, upwinded on the sign of the S-gradient; cells drift
    # up the gradient, so this adds to the net rightward flux when dS > 0
    dS = S[1:] - S[:-1]
    rho_up = np.where(dS > 0.0, left, right)
    chem_edge = (
        params.chi0 * (1.0 - rho_up) * (1.0 - a * rho_up) * rho_up * dS / (h * h)
    )

    edge = diff_edge + chem_edge
    rhs = np.empty_like(rho)
    rhs[0] = -edge[0]
    rhs[1:-1] = edge[:-1] - edge[1:]
    rhs[-1] = edge[-1]
    return rhs


def stable_dt(
    rho: np.ndarray, S: np.ndarray, params: ModelParams, h: float
) -> float:
    """Adaptive explicit step: parabolic and advective bounds with guards.

    The parabolic denominator also includes the raw master-equation
    exchange factor, which can exceed |D| when the whole profile sits near
    a zero of the diffusivity.
    """
    absD = float(np.max(np.abs(diffusivity_unchecked(rho, params))))
    occupancy = (1.0 - rho) * (1.0 - params.alpha * rho)
    rate_factor = float(np.max(occupancy))
    dt_parab = h * h / (2.0 * max(absD, rate_factor, _EPS))
    dS = np.abs(S[1:] - S[:-1])
    vmax = params.chi0 * float(np.max(dS)) / h  # chi(rho) <= chi0
    dt_adv = h / max(vmax, _EPS)
    return DT_SAFETY * min(dt_parab, dt_adv)


def simulate_continuum(
    initial: Field,
    params: ModelParams,
    t_end: float,
    snapshot_times,
    *,
    stop_on_hit: bool = False,
    method: str = "rk2",
    track_onset: bool = False,
) -> SimResult:
    """Advance the continuum model, optionally stopping at first contact
    with the lower edge of the unstable interval.

    With ``track_onset`` the run also records when grid-scale oscillations
    first appear (time, density level, location) in the diagnostics.
    """
    rho0 = initial.values
    if np.any(rho0 < 0.0) or np.any(rho0 > 1.0):
        raise ValueError("initial densities must lie in [0, 1]")
    grid = initial.grid
    if abs(grid.L - params.L) > 1e-12 * params.L:
        raise ValueError("grid length does not match params.L")

    threshold = None
    if stop_on_hit:
        iv = unstable_interval(params)
        if iv is None:
            raise ValueError("stop_on_hit requires alpha > 3/4")
        threshold = iv.lo

    solver = ChemoattractantSolver(grid)
    h = grid.h

    def rhs(r, s, diag):
        return continuum_rhs(r, s, params, h, diag)

    def dt_fn(r, s):
        return stable_dt(r, s, params, h)

    snaps, hit, diag = advance(
        rho0,
        grid,
        t_end,
        snapshot_times,
        rhs,
        dt_fn,
        solver,
        method=method,
        hit_threshold=threshold,
        track_onset=track_onset,
    )
    states = [
        SimState(Field(grid, r), Field(grid, s), t, {"mass": h * float(np.sum(r))})
        for t, r, s in snaps
    ]
    hit_event = None
    hit_state = None
    if hit is not None:
        t_c, x_c, node, rho_c = hit
        hit_event = HitEvent(x_c=x_c, t_c=t_c, node=node)
        hit_state = SimState(
            Field(grid, rho_c),
            Field(grid, solver.solve_values(rho_c)),
            t_c,
            {"mass": h * float(np.sum(rho_c))},
        )
    return SimResult(states, hit_event, hit_state, diag)


def cosine_mode_amplitude(rho: np.ndarray, grid: Grid1D, k: int) -> float:
    """Coefficient of cos(k*pi*x/L) in the trapezoid-weighted expansion."""
    x = grid.x
    mode = np.cos(k * math.pi * x / grid.L)
    w = np.ones_like(x)
    w[0] = 0.5
    w[-1] = 0.5
    norm = float(np.sum(w * mode * mode))
    return float(np.sum(w * mode * rho)) / norm


def measure_growth_rate(
    rho_bar: float,
    k: int,
    eps: float,
    params: ModelParams,
    window: tuple[float, float],
    n: int = 256,
    samples: int = 25,
) -> float:
    """Fitted exponential rate of the k-th cosine mode seeded at amplitude eps.

    Runs the continuum solver from rho_bar + eps*cos(k*pi*x/L) and fits a
    line to log|amplitude| over the window; fails if the amplitude decays
    into round-off or wanders out of the linear regime (|amp| > 10*eps).
    """
    if eps <= 0.0 or eps > 1e-3:
        raise ValueError("eps must lie in (0, 1e-3]")
    if not 0.0 <= rho_bar - eps or not rho_bar + eps <= 1.0:
        raise ValueError("rho_bar +/- eps must stay inside [0, 1]")
    grid = Grid1D(n, params.L)
    x = grid.x
    rho0 = rho_bar + eps * np.cos(k * math.pi * x / params.L)
    t0, t1 = window
    times = np.linspace(t0, t1, samples)
    result = simulate_continuum(Field(grid, rho0), params, t1, times)
    amps = np.array(
        [cosine_mode_amplitude(st.rho.values, grid, k) for st in result.states]
    )
    over = np.flatnonzero(np.abs(amps) > 10.0 * eps)
    if over.size:
        amps = amps[: over[0]]  # fit only while the mode stays linear
    if len(amps) < 3:
        raise RuntimeError("mode left the linear regime almost immediately")
    if np.any(np.abs(amps) < 1e3 * np.finfo(float).eps):
        raise RuntimeError("mode amplitude fell below round-off in the window")
    fit = linregress(times[: len(amps)], np.log(np.abs(amps)))
    return float(fit.slope)


def detect_plateau_edges(
    state: SimState | Field, params: ModelParams, *, max_span: int = 5, flat_nodes: int = 10
):
    """Locate monotone transitions crossing the unstable interval.

    Returns a list of (x_edge, left_value, right_value) with the flat
    values taken as medians of ``flat_nodes`` nodes on each side.  Empty
    when the parameters admit no unstable interval or the profile never
    crosses it within ``max_span`` nodes.
    """
    iv = unstable_interval(params)
    if iv is None:
        return []
    rho = state.rho.values if isinstance(state, SimState) else state.values
    grid = state.rho.grid if isinstance(state, SimState) else state.grid
    x = grid.x
    n = rho.shape[0]
    below = rho <= iv.lo
    above = rho >= iv.hi
    edges = []
    i = 0
    while i < n - 1:
        if below[i]:
            # look ahead for a rise through the interval within max_span
            jmax = min(i + max_span, n - 1)
            js = [j for j in range(i + 1, jmax + 1) if above[j]]
            if js:
                j = js[0]
                mid = 0.5 * (iv.lo + iv.hi)
                x_edge = float(np.interp(mid, rho[i : j + 1], x[i : j + 1]))
                lo_val = float(np.median(rho[max(i - flat_nodes + 1, 0) : i + 1]))
                hi_val = float(np.median(rho[j : j + flat_nodes]))
                edges.append((x_edge, lo_val, hi_val))
                i = j
                continue
        if above[i]:
            jmax = min(i + max_span, n - 1)
            js = [j for j in range(i + 1, jmax + 1) if below[j]]
            if js:
                j = js[0]
                mid = 0.5 * (iv.lo + iv.hi)
                seg = rho[i : j + 1]
                x_edge = float(np.interp(-mid, -seg, x[i : j + 1]))
                hi_val = float(np.median(rho[max(i - flat_nodes + 1, 0) : i + 1]))
                lo_val = float(np.median(rho[j : j + flat_nodes]))
                edges.append((x_edge, hi_val, lo_val))
                i = j
                continue
        i += 1
    return edges


def count_plateaus(state: SimState | Field, params: ModelParams) -> int:
    """Number of high-density plateaus: paired rising/falling edge count."""
    edges = detect_plateau_edges(state, params)
    rising = sum(1 for _, lv, rv in edges if lv < rv)
    falling = sum(1 for _, lv, rv in edges if lv > rv)
    return min(rising, falling)
