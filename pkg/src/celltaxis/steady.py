"""Steady states via the phase-plane of the integrated flux balance.

A smooth steady state satisfies G(rho) = S - C pointwise, where G is the
antiderivative of D/(chi*rho).  Substituting the chemoattractant equation
turns this into a second-order Hamiltonian system in sigma = G(rho) whose
critical points are saddles or centres; Neumann solutions are half-orbits
around a centre (or integer multiples).  Orbits are built here from the
energy time map (a quadrature), which lands the no-flux endpoints exactly,
rather than by shooting.

Discontinuous (weak) steady states jump across the unstable interval; the
verifier reports the antiderivative-matching defect [K(rho)] and the
gradient-coupling defect at each jump instead of asserting they vanish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid, quad
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.optimize import brentq

from .continuum import SimState, detect_plateau_edges
from .elliptic import ChemoattractantSolver
from .grids import Field, Grid1D
from .model import (
    DomainError,
    ModelParams,
    chemotactic_sensitivity,
    diffusivity,
    primitive_G,
    primitive_K,
    stability_predicates,
    unstable_interval,
)

__all__ = [
    "CriticalPoint",
    "CriticalPointSet",
    "SteadyProfile",
    "WeakSteadyReport",
    "critical_points",
    "min_domain_length",
    "construct_smooth_steady",
    "verify_weak_steady",
    "stability_predicates",
]

_RHO_EPS = 1e-5
_D_MARGIN = 1e-4


@dataclass(frozen=True)
class CriticalPoint:
    rho: float
    kind: str  # "saddle" | "centre"


@dataclass
class CriticalPointSet:
    C: float
    points: list[CriticalPoint]

    @property
    def centre(self) -> CriticalPoint | None:
        for p in self.points:
            if p.kind == "centre":
                return p
        return None


@dataclass
class SegmentReport:
    x_lo: float
    x_hi: float
    max_flux_residual: float
    scale: float

    @property
    def relative(self) -> float:
        return self.max_flux_residual / self.scale if self.scale > 0 else 0.0


@dataclass
class JumpReport:
    position: float
    left_value: float
    right_value: float
    K_mismatch: float
    gradient_coupling_mismatch: float


@dataclass
class WeakSteadyReport:
    jumps: list[JumpReport]
    segments: list[SegmentReport]
    flux_tol_rel: float
    jump_K_tol: float

    @property
    def passed(self) -> bool:
        ok_seg = all(s.relative <= self.flux_tol_rel for s in self.segments)
        ok_jmp = all(j.K_mismatch <= self.jump_K_tol for j in self.jumps)
        return ok_seg and ok_jmp


@dataclass
class SteadyProfile:
    rho: Field
    S: Field
    segments: list[tuple[float, float, float]]  # (x_lo, x_hi, C)
    jumps: list[tuple[float, float, float]]  # (position, left, right)
    residual: WeakSteadyReport
    energy: float = 0.0
    half_period: float = 0.0


def _branch_interval(params: ModelParams, branch: str | None) -> tuple[float, float]:
    iv = unstable_interval(params)
    if iv is None:
        if branch not in (None, "full"):
            raise DomainError("branch selection only applies for alpha > 3/4")
        return (_RHO_EPS, 1.0 - _RHO_EPS)
    if branch == "low":
        return (_RHO_EPS, iv.lo * (1.0 - _D_MARGIN))
    if branch == "high":
        hi = iv.hi + _D_MARGIN * (1.0 - iv.hi)
        return (hi, 1.0 - _RHO_EPS)
    raise DomainError(
        "alpha > 3/4 makes G only piecewise monotone; pass branch='low' or 'high'"
    )


class _GTable:
    """Monotone tabulation of G on one branch, with fast inverse."""

    def __init__(self, params: ModelParams, branch: str | None, m: int = 2000):
        if params.chi0 <= 0.0:
            raise DomainError("phase-plane analysis requires chi0 > 0")
        lo, hi = _branch_interval(params, branch)
        u = np.linspace(0.0, 1.0, m)
        r = lo + (hi - lo) * 0.5 * (1.0 - np.cos(math.pi * u))  # end-refined
        g = np.empty(m)
        g[0] = primitive_G(r[0], params)
        integrand = lambda t: float(diffusivity(t, params)) / (
            params.chi0 * (1.0 - t) * (1.0 - params.alpha * t) * t
        )
        for i in range(1, m):
            seg, _ = quad(integrand, r[i - 1], r[i], epsabs=1e-13, epsrel=1e-12)
            g[i] = g[i - 1] + seg
        if np.any(np.diff(g) <= 0.0):
            raise DomainError("G is not strictly increasing on this branch")
        self.rho_grid = r
        self.sigma_grid = g
        self.G = PchipInterpolator(r, g)
        self.G_inv = PchipInterpolator(g, r)
        self.params = params

    def rho_of_sigma(self, sigma):
        return self.G_inv(sigma)


def critical_points(
    C: float, params: ModelParams, branch: str | None = None
) -> CriticalPointSet:
    """Roots of G(rho) - rho + C on the (branch of the) density range.

    Classification: a root is a centre when G'(rho) < 1 there (the
    linearisation rotates), a saddle when G'(rho) > 1.
    """
    table = _GTable(params, branch)
    g = table.sigma_grid - table.rho_grid + C
    signs = np.sign(g)
    pts: list[CriticalPoint] = []
    for i in np.flatnonzero(signs[:-1] * signs[1:] < 0):
        a, b = table.rho_grid[i], table.rho_grid[i + 1]
        root = brentq(lambda r: primitive_G(r, params) - r + C, a, b, xtol=1e-13)
        gprime = float(diffusivity(root, params)) / (
            float(chemotactic_sensitivity(root, params)) * root
        )
        kind = "centre" if gprime < 1.0 else "saddle"
        pts.append(CriticalPoint(float(root), kind))
    for i in np.flatnonzero(g == 0.0):
        pts.append(CriticalPoint(float(table.rho_grid[i]), "centre"))
    pts.sort(key=lambda p: p.rho)
    return CriticalPointSet(C=C, points=pts)


def min_domain_length(
    C: float, params: ModelParams, branch: str | None = None
) -> float:
    """Shortest domain admitting a non-trivial steady state at this C.

    Equals pi / omega with omega the rotation frequency of the
    linearisation about the nonlinear centre.
    """
    cps = critical_points(C, params, branch)
    centre = cps.centre
    if centre is None:
        raise DomainError("no centre among the critical points at this C")
    rc = centre.rho
    D = float(diffusivity(rc, params))
    chir = float(chemotactic_sensitivity(rc, params)) * rc
    if chir <= D:
        raise DomainError("centre is marginal: chi(rho)*rho must exceed D(rho)")
    return math.pi * math.sqrt(D / (chir - D))


class _OrbitSystem:
    """Potential-well form of the steady-state system on one branch."""

    def __init__(self, C: float, params: ModelParams, branch: str | None):
        self.table = _GTable(params, branch)
        self.C = C
        cps = critical_points(C, params, branch)
        centres = [p for p in cps.points if p.kind == "centre"]
        if len(centres) != 1:
            raise DomainError(
                f"need exactly one centre on the branch, found {len(centres)} "
                f"among {len(cps.points)} critical points; adjust C or chi0"
            )
        self.cps = cps
        G = self.table.G
        centre = centres[0]
        self.sigma_c = float(G(centre.rho))
        # the orbit well is walled by the nearest saddle on each side, or by
        # the branch end where no saddle exists
        saddles_lo = [p.rho for p in cps.points if p.kind == "saddle" and p.rho < centre.rho]
        saddles_hi = [p.rho for p in cps.points if p.kind == "saddle" and p.rho > centre.rho]
        self.sigma_s1 = float(
            G(max(saddles_lo)) if saddles_lo else self.table.sigma_grid[0]
        )
        self.sigma_s2 = float(
            G(min(saddles_hi)) if saddles_hi else self.table.sigma_grid[-1]
        )
        sg = self.table.sigma_grid
        f_vals = sg - self.table.rho_grid + C
        f_spline = CubicSpline(sg, f_vals)
        Vs = f_spline.antiderivative()
        v_c = float(Vs(self.sigma_c))
        self._Vs = Vs
        self._v_c = v_c
        self.E_max = min(self.V(self.sigma_s1), self.V(self.sigma_s2))
        if self.E_max <= 0.0:
            raise DomainError("no potential well around the centre on this branch")

    def V(self, sigma):
        return -(self._Vs(sigma) - self._v_c)

    def turning_points(self, E: float) -> tuple[float, float]:
        f = lambda s: self.V(s) - E
        lo = brentq(f, self.sigma_s1, self.sigma_c, xtol=1e-15)
        hi = brentq(f, self.sigma_c, self.sigma_s2, xtol=1e-15)
        return lo, hi

    def half_period(self, E: float, n_nodes: int = 240) -> float:
        """Spatial length of a half-orbit at energy E (time-map quadrature)."""
        s_lo, s_hi = self.turning_points(E)
        mid, amp = 0.5 * (s_hi + s_lo), 0.5 * (s_hi - s_lo)
        theta, w = np.polynomial.legendre.leggauss(n_nodes)
        theta = 0.5 * math.pi * theta
        w = w * 0.5 * math.pi
        sigma = mid + amp * np.sin(theta)
        under = np.maximum(2.0 * (E - self.V(sigma)), 1e-300)
        return float(np.sum(w * amp * np.cos(theta) / np.sqrt(under)))

    def orbit_energy_for_length(self, length: float) -> float:
        """Energy whose half-orbit spans the given length (bisection)."""
        e_lo = self.E_max * 1e-10
        e_hi = self.E_max * (1.0 - 1e-12)
        t_lo = self.half_period(e_lo)
        if length <= t_lo:
            raise DomainError(
                f"domain section {length:.6g} is below the minimal half-period "
                f"{t_lo:.6g}; no orbit amplitude matches"
            )
        f = lambda E: self.half_period(E) - length
        if f(e_hi) < 0.0:
            raise DomainError("requested length exceeds the reachable half-periods")
        return brentq(f, e_lo, e_hi, xtol=1e-15, rtol=1e-14)

    def sample_half_orbit(self, E: float, n_theta: int = 4001):
        """(x, sigma) along one ascending half-orbit, x rescaled to the exact
        half-period so the turning points sit exactly at the ends."""
        s_lo, s_hi = self.turning_points(E)
        mid, amp = 0.5 * (s_hi + s_lo), 0.5 * (s_hi - s_lo)
        theta = np.linspace(-0.5 * math.pi, 0.5 * math.pi, n_theta)
        sigma = mid + amp * np.sin(theta)
        under = np.maximum(2.0 * (E - self.V(sigma)), 1e-300)
        integrand = amp * np.cos(theta) / np.sqrt(under)
        # endpoint limit: integrand -> sqrt(amp/|V'|) as theta -> +/- pi/2
        for j, s_end in ((0, s_lo), (-1, s_hi)):
            vp = abs(float(self._dV(s_end)))
            if vp > 0.0:
                integrand[j] = math.sqrt(amp / vp)
        x = np.concatenate(([0.0], cumulative_trapezoid(integrand, theta)))
        return x, sigma

    def _dV(self, sigma):
        return -(sigma - float(self.table.rho_of_sigma(sigma)) + self.C)


def _derivative(values: np.ndarray, h: float) -> np.ndarray:
    """Fourth-order interior first derivative, second-order near the ends."""
    n = values.shape[0]
    d = np.empty(n)
    d[2:-2] = (
        -values[4:] + 8.0 * values[3:-1] - 8.0 * values[1:-3] + values[:-4]
    ) / (12.0 * h)
    d[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
    d[1] = (values[2] - values[0]) / (2.0 * h)
    d[-2] = (values[-1] - values[-3]) / (2.0 * h)
    d[-1] = (3.0 * values[-1] - 4.0 * values[-2] + values[-3]) / (2.0 * h)
    return d


def _flux_residual_report(
    rho: np.ndarray,
    S: np.ndarray,
    grid: Grid1D,
    params: ModelParams,
    jumps,
    exclude: int,
    flux_tol_rel: float,
    jump_K_tol: float,
) -> WeakSteadyReport:
    h = grid.h
    x = grid.x
    rho_x = _derivative(rho, h)
    S_x = _derivative(S, h)
    D = diffusivity(np.clip(rho, 0.0, 1.0), params)
    chir = chemotactic_sensitivity(np.clip(rho, 0.0, 1.0), params) * rho
    flux = D * rho_x - chir * S_x
    scale = float(np.max(np.abs(D * rho_x))) + float(np.max(np.abs(chir * S_x)))
    scale = max(scale, 1e-30)

    jump_nodes = sorted(int(np.searchsorted(x, pos)) for pos, _, _ in jumps)
    bounds = [0] + [j for j in jump_nodes] + [grid.n]
    segments = []
    for a, b in zip(bounds[:-1], bounds[1:]):
        lo = a + exclude if a > 0 else a
        hi = b - exclude if b < grid.n else b
        if hi - lo < 3:
            continue
        seg_max = float(np.max(np.abs(flux[lo:hi])))
        segments.append(SegmentReport(x[lo], x[hi - 1], seg_max, scale))

    jump_reports = []
    for pos, left, right in jumps:
        Kl = float(primitive_K(np.clip(left, 0.0, 1.0), params))
        Kr = float(primitive_K(np.clip(right, 0.0, 1.0), params))
        j = int(np.searchsorted(x, pos))
        il = max(j - exclude, 1)
        ir = min(j + exclude, grid.n - 2)
        gl = float(
            diffusivity(np.clip(rho[il], 0, 1), params)
            / (chemotactic_sensitivity(np.clip(rho[il], 0, 1), params) * rho[il])
            * rho_x[il]
        ) if rho[il] > 0 else 0.0
        gr = float(
            diffusivity(np.clip(rho[ir], 0, 1), params)
            / (chemotactic_sensitivity(np.clip(rho[ir], 0, 1), params) * rho[ir])
            * rho_x[ir]
        ) if rho[ir] > 0 else 0.0
        jump_reports.append(
            JumpReport(pos, left, right, abs(Kl - Kr), abs(gl - gr))
        )
    return WeakSteadyReport(jump_reports, segments, flux_tol_rel, jump_K_tol)


def construct_smooth_steady(
    C: float,
    L: float,
    n_half_periods: int,
    params: ModelParams,
    *,
    n: int = 2001,
    branch: str | None = None,
) -> SteadyProfile:
    """Build a smooth Neumann steady state of n_half_periods half-orbits.

    The orbit energy is solved so the half-period times n_half_periods
    equals L exactly; the density profile has zero slope at both walls by
    construction.  The returned report carries the flux residual computed
    against the discrete chemoattractant solve on the same grid.
    """
    if n_half_periods < 1:
        raise DomainError("n_half_periods must be >= 1")
    if abs(L - params.L) > 1e-12 * params.L:
        raise DomainError("L must match params.L")
    system = _OrbitSystem(C, params, branch)
    seg_len = L / n_half_periods
    E = system.orbit_energy_for_length(seg_len)
    x_orb, sigma_orb = system.sample_half_orbit(E)
    x_orb = x_orb * (seg_len / x_orb[-1])
    sigma_of_x = PchipInterpolator(x_orb, sigma_orb)

    grid = Grid1D(n, L)
    x = grid.x
    seg_idx = np.minimum((x // seg_len).astype(int), n_half_periods - 1)
    x_loc = x - seg_idx * seg_len
    x_loc = np.where(seg_idx % 2 == 0, x_loc, seg_len - x_loc)
    x_loc = np.clip(x_loc, 0.0, seg_len)
    sigma = sigma_of_x(x_loc)
    rho = np.asarray(system.table.rho_of_sigma(sigma), dtype=float)

    solver = ChemoattractantSolver(grid)
    S = solver.solve_values(rho)
    report = _flux_residual_report(
        rho, S, grid, params, [], 0, flux_tol_rel=1e-6, jump_K_tol=1e-6
    )
    return SteadyProfile(
        rho=Field(grid, rho),
        S=Field(grid, S),
        segments=[(0.0, L, C)],
        jumps=[],
        residual=report,
        energy=E,
        half_period=seg_len,
    )


def verify_weak_steady(
    obj: SteadyProfile | SimState | Field,
    params: ModelParams,
    *,
    flux_tol_rel: float | None = None,
    jump_K_tol: float | None = None,
    edge_exclude: int = 12,
) -> WeakSteadyReport:
    """Residual report for a candidate (possibly discontinuous) steady state.

    Constructed profiles default to tight tolerances (1e-6 relative);
    simulation states to loose ones (1e-2), since the evolving scheme is
    first-order near jumps.  Jump defects are reported, never asserted.
    """
    if isinstance(obj, SteadyProfile):
        rho, S, grid = obj.rho.values, obj.S.values, obj.rho.grid
        jumps = list(obj.jumps)
        tol = 1e-6 if flux_tol_rel is None else flux_tol_rel
        ktol = 1e-6 if jump_K_tol is None else jump_K_tol
        exclude = edge_exclude if jumps else 0
    else:
        if isinstance(obj, SimState):
            rho, S, grid = obj.rho.values, obj.S.values, obj.rho.grid
        else:
            rho, grid = obj.values, obj.grid
            S = ChemoattractantSolver(grid).solve_values(rho)
        jumps = detect_plateau_edges(Field(grid, rho), params)
        tol = 1e-2 if flux_tol_rel is None else flux_tol_rel
        ktol = 1e-2 if jump_K_tol is None else jump_K_tol
        exclude = edge_exclude
    return _flux_residual_report(
        rho, S, grid, params, jumps, exclude, tol, ktol
    )
