"""Multi-phase moving-boundary continuation past first contact with the
unstable interval.

When a low-density profile touches the lower edge of the unstable
interval, the solution is continued by inserting a (numerically
regularised) zero-width high-density spike jumping between the configured
plateau values, then evolving alternating low/high phases.  Each phase is
rescaled onto the unit reference interval, which turns boundary motion
into an advection term; interior boundaries move at the jump-flux-balance
(Rankine-Hugoniot) speed, which conserves mass across the jump.  The
chemoattractant is still solved globally on a uniform grid, since it stays
C^1 across the density jumps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .continuum import HitEvent, SimState
from .elliptic import ChemoattractantSolver
from .grids import Field, Grid1D
from .model import (
    ModelParams,
    chemotactic_sensitivity_unchecked,
    diffusivity_unchecked,
    unstable_interval,
)

DT_SAFETY = 0.4
BOUNDARY_CFL = 0.5
_DT_FLOOR = 1e-13


class GeometryError(ValueError):
    """Raised for spike insertions or phase layouts the solver cannot handle."""


class StefanAbort(RuntimeError):
    """Time step collapsed; carries the partial result in ``result``."""

    def __init__(self, message: str, result):
        super().__init__(message)
        self.result = result


@dataclass
class Phase:
    """One low- or high-density phase on the unit reference interval."""

    kind: str  # "low" | "high"
    values: np.ndarray
    left_x: float
    right_x: float

    def __post_init__(self):
        if self.kind not in ("low", "high"):
            raise GeometryError(f"unknown phase kind {self.kind!r}")
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 1 or self.values.size < 4:
            raise GeometryError("phase needs at least 4 nodes")
        if self.right_x < self.left_x:
            raise GeometryError("phase has negative width")

    @property
    def width(self) -> float:
        return self.right_x - self.left_x

    @property
    def n_nodes(self) -> int:
        return self.values.size

    def node_positions(self) -> np.ndarray:
        return self.left_x + np.linspace(0.0, 1.0, self.values.size) * self.width

    def copy(self) -> "Phase":
        return Phase(self.kind, self.values.copy(), self.left_x, self.right_x)


@dataclass
class PhaseDecomposition:
    """Alternating low/high phases tiling [0, L], low at both walls."""

    phases: list[Phase]
    t: float

    def __post_init__(self):
        kinds = [p.kind for p in self.phases]
        if len(kinds) % 2 == 0 or kinds[0] != "low" or kinds[-1] != "low":
            raise GeometryError("phases must alternate low/high, low at both walls")
        for a, b in zip(kinds[:-1], kinds[1:]):
            if a == b:
                raise GeometryError("adjacent phases must alternate low/high")
        for a, b in zip(self.phases[:-1], self.phases[1:]):
            if abs(a.right_x - b.left_x) > 1e-9:
                raise GeometryError("phases must tile the domain without gaps")

    @property
    def boundaries(self) -> np.ndarray:
        return np.array([p.right_x for p in self.phases[:-1]])

    def copy(self) -> "PhaseDecomposition":
        return PhaseDecomposition([p.copy() for p in self.phases], self.t)

    def mass(self) -> float:
        total = 0.0
        for p in self.phases:
            if p.width > 0.0:
                total += p.width * float(
                    np.trapezoid(p.values, dx=1.0 / (p.n_nodes - 1))
                )
        return total

    def low_phase_interior_max(self) -> float:
        worst = -np.inf
        for p in self.phases:
            if p.kind == "low":
                worst = max(worst, float(np.max(p.values[1:-1])))
        return worst


@dataclass
class StefanSnapshot:
    t: float
    decomposition: PhaseDecomposition
    S: Field
    boundaries: np.ndarray
    mass: float


@dataclass
class StefanDiagnostics:
    steps: int = 0
    dt_min: float = np.inf
    dt_max: float = 0.0
    mass_initial: float = 0.0
    mass_final: float = 0.0
    rel_mass_drift: float = 0.0
    low_phase_max_seen: float = -np.inf
    dt_underflow: bool = False
    insertions: list = field(default_factory=list)
    collapses: list = field(default_factory=list)


@dataclass
class StefanResult:
    snapshots: list[StefanSnapshot]
    final: PhaseDecomposition
    diagnostics: StefanDiagnostics


def _resample(xs: np.ndarray, values: np.ndarray, a: float, b: float, m: int):
    """Sample a piecewise-linear profile on m uniform nodes spanning [a, b]."""
    xt = a + np.linspace(0.0, 1.0, m) * (b - a)
    return np.interp(xt, xs, values)


def insert_spike(
    state: SimState,
    hit: HitEvent,
    params: ModelParams,
    *,
    nodes_per_phase: int = 100,
    w0: float | None = None,
) -> PhaseDecomposition:
    """Split the domain at the contact point into low / high / low phases.

    The high phase regularises the instantaneous zero-width spike: it gets
    width ``w0`` (one global grid spacing by default), value identically
    jump_high, and the facing nodes of the neighbouring low phases are
    overwritten with jump_low.
    """
    grid = state.rho.grid
    if w0 is None:
        w0 = grid.h
    x_c = hit.x_c
    L = grid.L
    if not 0.0 < x_c < L:
        raise GeometryError("contact point must be strictly inside the domain")
    s_l = x_c - 0.5 * w0
    s_r = x_c + 0.5 * w0
    min_low = max(4 * w0, 8 * L / (nodes_per_phase - 1))
    if s_l < min_low or s_r > L - min_low:
        raise GeometryError(
            "contact point too close to a wall for a three-phase split"
        )
    xs = grid.x
    rho = state.rho.values
    m = nodes_per_phase

    left_vals = _resample(xs, rho, 0.0, s_l, m)
    left_vals[-1] = params.jump_low
    right_vals = _resample(xs, rho, s_r, L, m)
    right_vals[0] = params.jump_low
    high_vals = np.full(m, params.jump_high)

    return PhaseDecomposition(
        [
            Phase("low", left_vals, 0.0, s_l),
            Phase("high", high_vals, s_l, s_r),
            Phase("low", right_vals, s_r, L),
        ],
        t=hit.t_c,
    )


def _split_low_phase(
    decomp: PhaseDecomposition,
    idx: int,
    x_c: float,
    params: ModelParams,
    w0: float,
) -> PhaseDecomposition:
    """Insert a new spike inside low phase ``idx`` at x_c (in-run contact)."""
    ph = decomp.phases[idx]
    if ph.kind != "low":
        raise GeometryError("spike insertion only applies to low phases")
    s_l, s_r = x_c - 0.5 * w0, x_c + 0.5 * w0
    m = ph.n_nodes
    min_low = max(4 * w0, 4 * ph.width / (m - 1))
    if s_l - ph.left_x < min_low or ph.right_x - s_r < min_low:
        raise GeometryError("in-phase contact point leaves a degenerate low phase")
    xs = ph.node_positions()
    left_vals = _resample(xs, ph.values, ph.left_x, s_l, m)
    right_vals = _resample(xs, ph.values, s_r, ph.right_x, m)
    left_vals[-1] = params.jump_low
    right_vals[0] = params.jump_low
    if idx > 0:
        left_vals[0] = params.jump_low
    if idx < len(decomp.phases) - 1:
        right_vals[-1] = params.jump_low
    new_phases = (
        decomp.phases[:idx]
        + [
            Phase("low", left_vals, ph.left_x, s_l),
            Phase("high", np.full(m, params.jump_high), s_l, s_r),
            Phase("low", right_vals, s_r, ph.right_x),
        ]
        + decomp.phases[idx + 1 :]
    )
    return PhaseDecomposition(new_phases, decomp.t)


def assemble_global(decomp: PhaseDecomposition, grid: Grid1D) -> np.ndarray:
    """Piecewise-linear interpolation of all phase fields onto one grid.

    A node exactly on a moving boundary takes the value of the phase to
    its right (single-valued by convention).
    """
    x = grid.x
    out = np.empty(grid.n)
    bounds = decomp.boundaries
    idx = np.searchsorted(bounds, x, side="right")
    for k, ph in enumerate(decomp.phases):
        mask = idx == k
        if not np.any(mask):
            continue
        if ph.width <= 0.0:
            out[mask] = ph.values[0]
            continue
        out[mask] = np.interp(x[mask], ph.node_positions(), ph.values)
    return out


def _one_sided_gradient_left_end(values: np.ndarray, dxi: float) -> float:
    """Second-order one-sided d/dxi at xi = 0."""
    return (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dxi)


def _one_sided_gradient_right_end(values: np.ndarray, dxi: float) -> float:
    """Second-order one-sided d/dxi at xi = 1."""
    return (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * dxi)


def _midpoint_fluxes(phase: Phase, Sx_mid: np.ndarray, params: ModelParams):
    """Physical flux chi*rho*S_x - D*rho_x at the phase's edge midpoints,
    built exactly as the interior scheme sees it (upwinded chemotaxis,
    centred diffusion)."""
    rho = phase.values
    dxi = 1.0 / (rho.size - 1)
    w = max(phase.width, 1e-300)
    rho_mid = 0.5 * (rho[:-1] + rho[1:])
    Fd = diffusivity_unchecked(rho_mid, params) * (rho[1:] - rho[:-1]) / (dxi * w)
    rho_up = np.where(Sx_mid > 0.0, rho[:-1], rho[1:])
    Fc = chemotactic_sensitivity_unchecked(rho_up, params) * rho_up * Sx_mid
    return Fc - Fd


def boundary_speeds(
    decomp: PhaseDecomposition,
    grid: Grid1D,
    Sx_global: np.ndarray,
    params: ModelParams,
) -> np.ndarray:
    """Jump-flux-balance speed of every interior boundary.

    The one-sided flux on each side is the interior scheme's own midpoint
    flux, extrapolated to the boundary at second order.  Using the same
    discrete flux the phase interiors exchange keeps the jump balance
    consistent with the interior updates, so mass stays balanced even
    while the end cells hold an under-resolved boundary layer.
    """
    bounds = decomp.boundaries
    speeds = np.zeros(bounds.size)
    xg = grid.x
    for j, s in enumerate(bounds):
        left, right = decomp.phases[j], decomp.phases[j + 1]
        rho_l = float(left.values[-1])
        rho_r = float(right.values[0])
        fl = _midpoint_fluxes(left, _phase_sx_mid(left, xg, Sx_global), params)
        fr = _midpoint_fluxes(right, _phase_sx_mid(right, xg, Sx_global), params)
        flux_l = 1.5 * fl[-1] - 0.5 * fl[-2]
        flux_r = 1.5 * fr[0] - 0.5 * fr[1]
        # speed = [physical flux]/[rho] across the jump
        speeds[j] = (flux_r - flux_l) / (rho_r - rho_l)
    return speeds


def _phase_sx_mid(phase: Phase, xg: np.ndarray, Sx_global: np.ndarray) -> np.ndarray:
    mids = phase.left_x + (np.arange(phase.n_nodes - 1) + 0.5) * (
        phase.width / (phase.n_nodes - 1)
    )
    return np.interp(mids, xg, Sx_global)


def phase_rhs(
    phase: Phase,
    s_dot_left: float,
    s_dot_right: float,
    Sx_mid: np.ndarray,
    params: ModelParams,
    *,
    left_is_wall: bool = False,
    right_is_wall: bool = False,
) -> np.ndarray:
    """Rescaled advection-diffusion right-hand side on the unit interval.

    ``Sx_mid`` is the physical chemoattractant gradient at the phase's
    edge midpoints (length n_nodes - 1).  Boundary motion enters as the
    advection term ((1-xi)*sdot_left + xi*sdot_right)/width * rho_xi,
    upwinded; Dirichlet end nodes are pinned (zero rhs), wall ends use a
    mirror closure.
    """
    rho = phase.values
    m = rho.size
    dxi = 1.0 / (m - 1)
    w = phase.width
    if w <= 0.0:
        raise GeometryError("phase_rhs needs positive width")
    rhs = np.zeros(m)

    # diffusion in the rescaled coordinate, conservative centred fluxes
    rho_mid = 0.5 * (rho[:-1] + rho[1:])
    Fd = diffusivity_unchecked(rho_mid, params) * (rho[1:] - rho[:-1]) / dxi
    # chemotaxis flux chi(rho)*rho*S_x at edge midpoints, upwinded on S_x
    rho_up = np.where(Sx_mid > 0.0, rho[:-1], rho[1:])
    Fc = chemotactic_sensitivity_unchecked(rho_up, params) * rho_up * Sx_mid

    inv_w2dxi = 1.0 / (w * w * dxi)
    inv_wdxi = 1.0 / (w * dxi)
    rhs[1:-1] = (Fd[1:] - Fd[:-1]) * inv_w2dxi - (Fc[1:] - Fc[:-1]) * inv_wdxi

    # boundary-motion advection, upwinded on the local drift velocity
    xi = np.linspace(0.0, 1.0, m)
    V = ((1.0 - xi) * s_dot_left + xi * s_dot_right) / w
    fwd = (rho[2:] - rho[1:-1]) / dxi
    bwd = (rho[1:-1] - rho[:-2]) / dxi
    rhs[1:-1] += V[1:-1] * np.where(V[1:-1] > 0.0, fwd, bwd)

    if left_is_wall:
        # mirror closure: diffusive flux reflects, chemotactic flux vanishes
        rhs[0] = 2.0 * Fd[0] * inv_w2dxi - 2.0 * Fc[0] * inv_wdxi
    if right_is_wall:
        rhs[-1] = -2.0 * Fd[-1] * inv_w2dxi + 2.0 * Fc[-1] * inv_wdxi
    return rhs


def _phase_dt(decomp: PhaseDecomposition, speeds: np.ndarray, params, Sx_by_phase):
    """Smallest of the per-phase parabolic / chemotactic / boundary bounds."""
    dt = np.inf
    swall = np.concatenate(([0.0], speeds, [0.0]))
    for k, ph in enumerate(decomp.phases):
        dxi = 1.0 / (ph.n_nodes - 1)
        hx = ph.width * dxi
        max_d = float(np.max(np.abs(diffusivity_unchecked(ph.values, params))))
        occupancy = (1.0 - ph.values) * (1.0 - params.alpha * ph.values)
        max_d = max(max_d, float(np.max(np.abs(occupancy))), 1e-300)
        dt = min(dt, DT_SAFETY * hx * hx / (2.0 * max_d))
        vmax = float(
            np.max(np.abs(chemotactic_sensitivity_unchecked(ph.values[:-1], params))
                   * np.abs(Sx_by_phase[k]))
        )
        if vmax > 0.0:
            dt = min(dt, DT_SAFETY * hx / vmax)
        smax = max(abs(swall[k]), abs(swall[k + 1]))
        if smax > 0.0:
            dt = min(dt, BOUNDARY_CFL * hx / smax)
    return dt


def _pin_dirichlet(decomp: PhaseDecomposition, params: ModelParams) -> None:
    n = len(decomp.phases)
    for k, ph in enumerate(decomp.phases):
        val = params.jump_high if ph.kind == "high" else params.jump_low
        if k > 0:
            ph.values[0] = val
        if k < n - 1:
            ph.values[-1] = val


def _stage(decomp, solver, grid, params):
    rho_g = assemble_global(decomp, grid)
    S = solver.solve_values(rho_g)
    Sx = solver.gradient_values(S)
    speeds = boundary_speeds(decomp, grid, Sx, params)
    xg = grid.x
    Sx_by_phase = []
    ks = []
    n = len(decomp.phases)
    swall = np.concatenate(([0.0], speeds, [0.0]))
    for k, ph in enumerate(decomp.phases):
        sx_mid = _phase_sx_mid(ph, xg, Sx)
        Sx_by_phase.append(sx_mid)
        ks.append(
            phase_rhs(
                ph,
                swall[k],
                swall[k + 1],
                sx_mid,
                params,
                left_is_wall=(k == 0),
                right_is_wall=(k == n - 1),
            )
        )
    return S, speeds, ks, Sx_by_phase


def _shifted(decomp: PhaseDecomposition, ks, speeds, dt, params) -> PhaseDecomposition:
    swall = np.concatenate(([0.0], speeds, [0.0]))
    phases = []
    L = decomp.phases[-1].right_x
    pos = np.concatenate(
        ([0.0], decomp.boundaries + dt * speeds, [L])
    )
    if np.any(np.diff(pos) <= 0.0):
        raise GeometryError("boundary crossing during step")
    for k, ph in enumerate(decomp.phases):
        phases.append(
            Phase(ph.kind, ph.values + dt * ks[k], pos[k], pos[k + 1])
        )
    out = PhaseDecomposition(phases, decomp.t + dt)
    _pin_dirichlet(out, params)
    return out


def _lerp_decomp(a: PhaseDecomposition, b: PhaseDecomposition, theta: float):
    phases = []
    for pa, pb in zip(a.phases, b.phases):
        phases.append(
            Phase(
                pa.kind,
                pa.values + theta * (pb.values - pa.values),
                pa.left_x + theta * (pb.left_x - pa.left_x),
                pa.right_x + theta * (pb.right_x - pa.right_x),
            )
        )
    return PhaseDecomposition(phases, a.t + theta * (b.t - a.t))


def _collapse_tiny_phases(
    decomp: PhaseDecomposition, w_min: float, diag: StefanDiagnostics, params
) -> PhaseDecomposition:
    """Remove interior phases thinner than w_min, merging their neighbours.

    The removed phase's mass is redistributed as a local triangular bump on
    the merged field, so the global mass is unchanged up to quadrature.
    """
    while True:
        widths = [p.width for p in decomp.phases]
        tiny = [
            k
            for k in range(1, len(decomp.phases) - 1)
            if widths[k] < w_min
        ]
        if not tiny:
            return decomp
        k = tiny[0]
        left, mid, right = decomp.phases[k - 1], decomp.phases[k], decomp.phases[k + 1]
        m = max(left.n_nodes, right.n_nodes)
        a, b = left.left_x, right.right_x
        mass_before = (
            left.width * np.trapezoid(left.values, dx=1.0 / (left.n_nodes - 1))
            + mid.width * np.trapezoid(mid.values, dx=1.0 / (mid.n_nodes - 1))
            + right.width * np.trapezoid(right.values, dx=1.0 / (right.n_nodes - 1))
        )
        xs = np.concatenate([left.node_positions(), right.node_positions()])
        vals = np.concatenate([left.values, right.values])
        merged_vals = _resample(xs, vals, a, b, m)
        merged = Phase(left.kind, merged_vals, a, b)
        mass_after = merged.width * np.trapezoid(
            merged.values, dx=1.0 / (m - 1)
        )
        deficit = float(mass_before - mass_after)
        # local triangular bump carrying the deficit, centred on the removed phase
        centre = 0.5 * (mid.left_x + mid.right_x)
        half = max(10.0 * merged.width / (m - 1), mid.width)
        xs_m = merged.node_positions()
        hat = np.maximum(0.0, 1.0 - np.abs(xs_m - centre) / half)
        hat_mass = merged.width / (m - 1) * float(np.trapezoid(hat))
        if hat_mass > 0.0:
            merged.values = merged.values + hat * (deficit / hat_mass)
        phases = decomp.phases[: k - 1] + [merged] + decomp.phases[k + 2 :]
        decomp = PhaseDecomposition(phases, decomp.t)
        _pin_dirichlet(decomp, params)
        diag.collapses.append({"t": decomp.t, "kind": mid.kind, "x": centre})


def simulate_stefan(
    start: PhaseDecomposition,
    params: ModelParams,
    t_end: float,
    snapshot_times,
    grid: Grid1D,
    *,
    method: str = "rk2",
    w_min: float | None = None,
    insert_on_contact: bool = True,
) -> StefanResult:
    """Advance a phase decomposition to t_end with snapshots.

    Each step assembles the density onto the uniform grid, solves the
    chemoattractant, computes boundary speeds, advances every phase and
    the boundaries explicitly (midpoint RK2 by default), and then handles
    events: thin phases are removed, and a low phase touching the lower
    edge of the unstable interval triggers a new spike insertion.
    """
    if method not in ("rk2", "euler"):
        raise ValueError(f"unknown method {method!r}")
    iv = unstable_interval(params)
    if iv is None:
        raise ValueError("the moving-boundary continuation requires alpha > 3/4")
    if w_min is None:
        w_min = 0.5 * grid.h
    solver = ChemoattractantSolver(grid)
    decomp = start.copy()
    _pin_dirichlet(decomp, params)
    diag = StefanDiagnostics()
    diag.mass_initial = decomp.mass()
    snap_times = sorted(float(s) for s in snapshot_times)
    pending = [s for s in snap_times if s >= decomp.t - 1e-12]
    snapshots: list[StefanSnapshot] = []

    def record(ts: float, dc: PhaseDecomposition):
        rho_g = assemble_global(dc, grid)
        S = Field(grid, solver.solve_values(rho_g))
        snapshots.append(
            StefanSnapshot(ts, dc.copy(), S, dc.boundaries.copy(), dc.mass())
        )

    while pending and pending[0] <= decomp.t + 1e-12:
        record(pending.pop(0), decomp)

    t_eps = 1e-12 * max(abs(t_end), 1.0)
    while decomp.t < t_end - t_eps:
        S, speeds, ks, sx_by_phase = _stage(decomp, solver, grid, params)
        dt = min(_phase_dt(decomp, speeds, params, sx_by_phase), t_end - decomp.t)
        if dt < _DT_FLOOR:
            diag.dt_underflow = True
            break
        try:
            if method == "rk2":
                mid = _shifted(decomp, ks, speeds, 0.5 * dt, params)
                _, speeds2, ks2, _ = _stage(mid, solver, grid, params)
                new = _shifted(decomp, ks2, speeds2, dt, params)
            else:
                new = _shifted(decomp, ks, speeds, dt, params)
        except GeometryError:
            dt *= 0.25  # boundary crossing at this step size; retry smaller
            try:
                new = _shifted(decomp, ks, speeds, dt, params)
            except GeometryError:
                diag.dt_underflow = True
                break

        while pending and pending[0] <= new.t + t_eps:
            ts = pending.pop(0)
            theta = min(max((ts - decomp.t) / dt, 0.0), 1.0)
            record(ts, _lerp_decomp(decomp, new, theta))

        diag.steps += 1
        diag.dt_min = min(diag.dt_min, dt)
        diag.dt_max = max(diag.dt_max, dt)
        low_max = new.low_phase_interior_max()
        diag.low_phase_max_seen = max(diag.low_phase_max_seen, low_max)

        new = _collapse_tiny_phases(new, w_min, diag, params)

        if insert_on_contact and low_max >= iv.lo:
            for k, ph in enumerate(new.phases):
                if ph.kind != "low":
                    continue
                interior = ph.values[1:-1]
                j = int(np.argmax(interior)) + 1
                if ph.values[j] >= iv.lo:
                    x_c = ph.left_x + j / (ph.n_nodes - 1) * ph.width
                    new = _split_low_phase(new, k, x_c, params, w0=grid.h)
                    diag.insertions.append({"t": new.t, "x": x_c})
                    break

        decomp = new

    diag.mass_final = decomp.mass()
    if diag.mass_initial > 0.0:
        diag.rel_mass_drift = abs(diag.mass_final - diag.mass_initial) / diag.mass_initial
    result = StefanResult(snapshots, decomp, diag)
    if diag.dt_underflow:
        raise StefanAbort("time step underflow in moving-boundary solve", result)
    return result
