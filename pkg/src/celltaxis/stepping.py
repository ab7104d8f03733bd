"""Shared explicit time-stepping loop for the lattice and continuum solvers.

Both models are method-of-lines systems coupled to the quasi-steady
chemoattractant solve, advanced here with an adaptive explicit step
(midpoint RK2 by default, forward Euler behind a switch).  Snapshots and
threshold-hit events are located by linear interpolation in time inside
the step that brackets them, so outputs land on the requested times
exactly and reproducibly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import ChemoattractantSolver
from .grids import Grid1D

_DT_FLOOR = 1e-13
_BOUND_TOL = 1e-12


class TimestepUnderflowError(RuntimeError):
    """dt collapsed below the abort floor (stiffness blow-up)."""


@dataclass
class OnsetRecord:
    """First appearance of a grid-scale oscillation during a run."""

    t: float
    level: float
    node: int
    x: float


@dataclass
class Diagnostics:
    steps: int = 0
    dt_min: float = np.inf
    dt_max: float = 0.0
    clamp_events: int = 0
    bound_violations: int = 0
    rho_min_seen: float = np.inf
    rho_max_seen: float = -np.inf
    mass_initial: float = 0.0
    mass_final: float = 0.0
    rel_mass_drift: float = 0.0
    dt_underflow: bool = False
    snapshot_dts: list = field(default_factory=list)
    onset: OnsetRecord | None = None

    def as_dict(self) -> dict:
        out = {
            "steps": self.steps,
            "dt_min": self.dt_min,
            "dt_max": self.dt_max,
            "clamp_events": self.clamp_events,
            "bound_violations": self.bound_violations,
            "rho_min_seen": self.rho_min_seen,
            "rho_max_seen": self.rho_max_seen,
            "mass_initial": self.mass_initial,
            "mass_final": self.mass_final,
            "rel_mass_drift": self.rel_mass_drift,
            "dt_underflow": self.dt_underflow,
        }
        if self.onset is not None:
            out["oscillation_onset"] = {
                "t": self.onset.t,
                "level": self.onset.level,
                "node": self.onset.node,
                "x": self.onset.x,
            }
        return out


def detect_grid_oscillation(
    rho: np.ndarray, amp_tol: float = 1e-3, max_gap: int = 4
) -> tuple[int, int] | None:
    """Locate a train of grid-scale wiggles; None if the profile is smooth.

    A wiggle train is three or more strict local extrema (alternating by
    construction), each within ``max_gap`` nodes of the next, with rises
    and falls exceeding ``amp_tol``.  A smooth profile has isolated
    extrema; a collapsed spike has at most a min/peak/min triple spaced
    wider than ``max_gap``.  Returns the (first node, last node) of the
    first such train.
    """
    d = np.diff(rho)
    sig = np.where(d > amp_tol, 1, np.where(d < -amp_tol, -1, 0))
    nz = np.flatnonzero(sig)
    if nz.size < 2:
        return None
    flips = np.flatnonzero(sig[nz[:-1]] * sig[nz[1:]] < 0)
    if flips.size < 3:
        return None
    # extremum sits between the flipping edges
    extrema = nz[flips] + 1
    close = (np.diff(extrema) <= max_gap)
    run = np.flatnonzero(close[:-1] & close[1:])
    if run.size == 0:
        return None
    j = int(run[0])
    return int(extrema[j]), int(extrema[j + 2])


def advance(
    rho0: np.ndarray,
    grid: Grid1D,
    t_end: float,
    snapshot_times,
    rhs,
    stable_dt,
    solver: ChemoattractantSolver,
    *,
    method: str = "rk2",
    hit_threshold: float | None = None,
    track_onset: bool = False,
    onset_check_every: int = 5,
):
    """Integrate d(rho)/dt = rhs(rho, S(rho)) from t=0 to t_end.

    Returns (snapshots, hit, diag) where snapshots is a list of
    (t, rho, S) triples at the requested times, and hit (when
    hit_threshold is set and reached) is (t_c, x_c, node, rho_at_hit);
    integration stops at the hit.
    """
    if method not in ("rk2", "euler"):
        raise ValueError(f"unknown method {method!r}")
    snap_times = sorted(float(s) for s in snapshot_times)
    if snap_times and (snap_times[0] < 0.0 or snap_times[-1] > t_end + 1e-12):
        raise ValueError("snapshot times must lie within [0, t_end]")

    diag = Diagnostics()
    rho = np.array(rho0, dtype=float)
    h = grid.h
    diag.mass_initial = h * float(np.sum(rho))
    S = solver.solve_values(rho)

    snapshots = []
    pending = list(snap_times)
    last_dt = 0.0

    def take_snapshot(ts, rho_s):
        snapshots.append((ts, rho_s, solver.solve_values(rho_s)))
        diag.snapshot_dts.append((ts, last_dt))

    while pending and pending[0] <= 0.0:
        take_snapshot(pending.pop(0), rho.copy())

    hit = None
    if hit_threshold is not None and float(np.max(rho)) >= hit_threshold:
        node = int(np.argmax(rho))
        hit = (0.0, node * h, node, rho.copy())
        diag.mass_final = diag.mass_initial
        return snapshots, hit, diag

    t = 0.0
    t_eps = 1e-12 * max(t_end, 1.0)
    while t < t_end - t_eps:
        dt = min(stable_dt(rho, S), t_end - t)
        if dt < _DT_FLOOR:
            diag.dt_underflow = True
            break
        last_dt = dt
        if method == "rk2":
            k1 = rhs(rho, S, diag)
            rho_mid = rho + (0.5 * dt) * k1
            S_mid = solver.solve_values(rho_mid)
            k2 = rhs(rho_mid, S_mid, diag)
            rho_new = rho + dt * k2
        else:
            rho_new = rho + dt * rhs(rho, S, diag)
        t_new = t + dt

        if hit_threshold is not None:
            new_hits = rho_new >= hit_threshold
            if np.any(new_hits):
                idx = np.flatnonzero(new_hits)
                denom = rho_new[idx] - rho[idx]
                theta = np.where(
                    denom > 0.0, (hit_threshold - rho[idx]) / denom, 1.0
                )
                theta = np.clip(theta, 0.0, 1.0)
                j = int(np.argmin(theta))
                th = float(theta[j])
                node = int(idx[j])
                t_c = t + th * dt
                rho_c = rho + th * (rho_new - rho)
                while pending and pending[0] <= t_c + t_eps:
                    ts = pending.pop(0)
                    th_s = min(max((ts - t) / dt, 0.0), 1.0)
                    take_snapshot(ts, rho + th_s * (rho_new - rho))
                hit = (t_c, node * h, node, rho_c)
                rho = rho_c
                t = t_c
                break

        while pending and pending[0] <= t_new + t_eps:
            ts = pending.pop(0)
            th = min(max((ts - t) / dt, 0.0), 1.0)
            take_snapshot(ts, rho + th * (rho_new - rho))

        diag.steps += 1
        diag.dt_min = min(diag.dt_min, dt)
        diag.dt_max = max(diag.dt_max, dt)
        mn = float(np.min(rho_new))
        mx = float(np.max(rho_new))
        diag.rho_min_seen = min(diag.rho_min_seen, mn)
        diag.rho_max_seen = max(diag.rho_max_seen, mx)
        if mn < -_BOUND_TOL or mx > 1.0 + _BOUND_TOL:
            diag.bound_violations += 1

        if track_onset and diag.onset is None and diag.steps % onset_check_every == 0:
            span = detect_grid_oscillation(rho_new)
            if span is not None:
                a, b = span
                lo = max(a - 2, 0)
                hi = min(b + 3, rho_new.shape[0])
                # median over the wiggle window: the level the oscillation
                # sits at, insensitive to the (fast-growing) wiggle amplitude
                level = float(np.median(rho_new[lo:hi]))
                diag.onset = OnsetRecord(t=t_new, level=level, node=a, x=a * h)

        rho = rho_new
        S = solver.solve_values(rho)
        t = t_new

    diag.mass_final = h * float(np.sum(rho))
    if diag.mass_initial != 0.0:
        diag.rel_mass_drift = abs(diag.mass_final - diag.mass_initial) / abs(
            diag.mass_initial
        )
    return snapshots, hit, diag
