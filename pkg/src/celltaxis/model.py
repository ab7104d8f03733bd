"""Closed-form model coefficients and linear-stability quantities.

The motility model has two dimensionless parameters: an adhesion
coefficient ``alpha`` in [0, 1] and a chemotactic sensitivity ``chi0 >= 0``.
Cells live on a domain of length ``L`` with no-flux walls.  The nonlinear
diffusivity turns negative on a density interval once alpha exceeds 3/4,
which is where all the interesting (ill-posed) behaviour comes from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad


class DomainError(ValueError):
    """Raised when an argument leaves the physically meaningful range."""


class NoUnstableModeError(ValueError):
    """Raised when asked for a dominant wavemode of a stable uniform state."""


@dataclass(frozen=True)
class UnstableInterval:
    """Density interval (lo, hi) on which the diffusivity is negative."""

    lo: float
    hi: float

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def contains(self, rho: float) -> bool:
        return self.lo < rho < self.hi


@dataclass(frozen=True)
class ModelParams:
    """Parameter set shared by every solver.

    ``jump_low``/``jump_high`` are the plateau edge densities used by the
    moving-boundary continuation; they are configuration inputs (defaults
    are the alpha = 0.95 values) and must straddle the unstable interval
    whenever one exists.
    """

    alpha: float
    chi0: float
    L: float
    jump_low: float = 0.055
    jump_high: float = 0.99

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.chi0 < 0.0:
            raise DomainError(f"chi0 must be >= 0, got {self.chi0}")
        if self.L <= 0.0:
            raise DomainError(f"L must be > 0, got {self.L}")
        if not 0.0 < self.jump_low < 1.0 or not 0.0 < self.jump_high < 1.0:
            raise DomainError("jump values must lie in (0, 1)")
        if self.jump_low >= self.jump_high:
            raise DomainError("jump_low must be below jump_high")
        iv = unstable_interval(self)
        if iv is not None:
            # at alpha = 1 the interval reaches density 1, where no jump
            # value above it exists; only enforceable ends are checked
            bad_low = iv.lo > 1e-12 and self.jump_low >= iv.lo
            bad_high = iv.hi < 1.0 - 1e-12 and self.jump_high <= iv.hi
            if bad_low or bad_high:
                raise DomainError(
                    "jump values must straddle the unstable interval "
                    f"({iv.lo:.6f}, {iv.hi:.6f})"
                )


def _check_density(rho, name="rho"):
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0) or np.any(r > 1.0):
        raise DomainError(f"{name} must lie in [0, 1]")
    return r


def diffusivity(rho, params: ModelParams):
    """Nonlinear diffusivity 3*alpha*(rho - 2/3)**2 + 1 - 4*alpha/3."""
    r = _check_density(rho)
    a = params.alpha
    return 3.0 * a * (r - 2.0 / 3.0) ** 2 + 1.0 - 4.0 * a / 3.0


def diffusivity_unchecked(rho, params: ModelParams):
    """diffusivity() without the [0, 1] range check.

    Simulation states can overshoot [0, 1] by round-off in ill-posed runs;
    the polynomial itself is fine to evaluate anywhere.
    """
    a = params.alpha
    r = np.asarray(rho, dtype=float)
    return 3.0 * a * (r - 2.0 / 3.0) ** 2 + 1.0 - 4.0 * a / 3.0


def chemotactic_sensitivity(rho, params: ModelParams):
    """Volume-filling chemotactic sensitivity chi0*(1 - rho)*(1 - alpha*rho)."""
    r = _check_density(rho)
    return params.chi0 * (1.0 - r) * (1.0 - params.alpha * r)


def chemotactic_sensitivity_unchecked(rho, params: ModelParams):
    r = np.asarray(rho, dtype=float)
    return params.chi0 * (1.0 - r) * (1.0 - params.alpha * r)


def unstable_interval(params: ModelParams) -> UnstableInterval | None:
    """Interval of densities with negative diffusivity; None for alpha <= 3/4."""
    a = params.alpha
    if a <= 0.75:
        return None
    root = math.sqrt(a * (4.0 * a - 3.0))
    return UnstableInterval((2.0 * a - root) / (3.0 * a), (2.0 * a + root) / (3.0 * a))


def dispersion_rate(k: int, rho_bar: float, params: ModelParams) -> float:
    """Linear growth rate of the k-th cosine mode about a uniform state."""
    _check_density(rho_bar, "rho_bar")
    q2 = (k * math.pi / params.L) ** 2
    D = float(diffusivity(rho_bar, params))
    chir = float(chemotactic_sensitivity(rho_bar, params)) * rho_bar
    return q2 * (-D + chir / (1.0 + q2))


def dominant_wavemode(rho_bar: float, params: ModelParams) -> float:
    """Continuous wavenumber k*pi/L maximising the dispersion rate.

    Requires positive diffusivity at rho_bar and chi(rho)*rho >= D(rho);
    returns 0 at marginal stability.
    """
    _check_density(rho_bar, "rho_bar")
    D = float(diffusivity(rho_bar, params))
    if D <= 0.0:
        raise DomainError("dominant wavemode undefined where diffusivity <= 0")
    chir = float(chemotactic_sensitivity(rho_bar, params)) * rho_bar
    if chir < D:
        raise NoUnstableModeError(
            "no unstable mode: chi(rho)*rho < D(rho) at this density"
        )
    return math.sqrt(math.sqrt(chir / D) - 1.0)


def primitive_K(rho, params: ModelParams):
    """Antiderivative of the diffusivity, normalised so K(0) = 0."""
    r = _check_density(rho)
    a = params.alpha
    return a * (r - 2.0 / 3.0) ** 3 + (1.0 - 4.0 * a / 3.0) * r + 8.0 * a / 27.0


def _g_integrand(u: float, params: ModelParams) -> float:
    return float(diffusivity_unchecked(u, params)) / (
        params.chi0 * (1.0 - u) * (1.0 - params.alpha * u) * u
    )


def primitive_G(rho: float, params: ModelParams) -> float:
    """Antiderivative of D(rho)/(chi(rho)*rho), based at rho = 1/2.

    Computed by adaptive quadrature; the integrand diverges logarithmically
    at the interval ends, so rho must lie strictly inside (0, 1).
    """
    if params.chi0 <= 0.0:
        raise DomainError("primitive_G requires chi0 > 0")
    if not 0.0 < rho < 1.0:
        raise DomainError("primitive_G is singular at rho = 0 and rho = 1")
    if rho == 0.5:
        return 0.0
    val, _ = quad(_g_integrand, 0.5, rho, args=(params,), epsabs=1e-12, epsrel=1e-12,
                  limit=200)
    return val


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> tuple[float, float]:
    """Golden-section maximisation of a unimodal scalar function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _occupancy_cubic_max(alpha: float) -> float:
    """max over [0, 1] of (1 - rho)*(1 - alpha*rho)*rho."""
    _, val = _golden_max(lambda r: (1.0 - r) * (1.0 - alpha * r) * r, 0.0, 1.0)
    return val


REGION_LABELS = ("I", "II", "III", "IV")


def _stability_margin_F(rho, alpha: float, chi0: float):
    """F(rho) = D(rho) - chi(rho)*rho; negative values admit instability."""
    r = np.asarray(rho, dtype=float)
    D = 3.0 * alpha * (r - 2.0 / 3.0) ** 2 + 1.0 - 4.0 * alpha / 3.0
    return D - chi0 * (1.0 - r) * (1.0 - alpha * r) * r


def _min_F(alpha: float, chi0: float) -> float:
    grid = np.linspace(0.0, 1.0, 2001)
    vals = _stability_margin_F(grid, alpha, chi0)
    i = int(np.argmin(vals))
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    _, neg = _golden_max(lambda r: -_stability_margin_F(r, alpha, chi0), lo, hi)
    return min(float(vals[i]), -neg)


def classify_region(alpha: float, chi0: float) -> str:
    """Parameter-space region tag.

    IV: diffusivity can turn negative (alpha > 3/4).
    III: F(rho) = D - chi*rho attains negative values (non-uniform steady
         states possible for suitable mass and domain length).
    I: uniform states are globally stable for every domain length
       (chi0 * max rho*(1-rho)*(1-alpha*rho) below the diffusivity floor).
    II: everything else (linearly stable, global stability only for small L).
    """
    if not 0.0 <= alpha <= 1.0 or chi0 < 0.0:
        raise DomainError("alpha must lie in [0, 1] and chi0 must be >= 0")
    if alpha > 0.75:
        return "IV"
    if _min_F(alpha, chi0) < 0.0:
        return "III"
    if chi0 * _occupancy_cubic_max(alpha) < 1.0 - 4.0 * alpha / 3.0:
        return "I"
    return "II"


def critical_curve_chi0(alpha: float, tol: float = 1e-12) -> float:
    """chi0 at which F(rho) = D - chi*rho acquires a double root in (0, 1).

    This is the II/III boundary in parameter space.  Solved by damped
    Newton iteration on (F, F') in the unknowns (rho, chi0), seeded from a
    grid scan of D(rho)/p(rho) with p = rho*(1-rho)*(1-alpha*rho); the
    scan minimum itself is the fallback if Newton leaves its basin.
    """
    if not 0.0 <= alpha <= 0.75:
        raise DomainError("critical curve defined for alpha in [0, 3/4]")

    def p(r):
        return (1.0 - r) * (1.0 - alpha * r) * r

    def dp(r):
        return 1.0 - 2.0 * (1.0 + alpha) * r + 3.0 * alpha * r * r

    def d2p(r):
        return -2.0 * (1.0 + alpha) + 6.0 * alpha * r

    def D(r):
        return 3.0 * alpha * (r - 2.0 / 3.0) ** 2 + 1.0 - 4.0 * alpha / 3.0

    def dD(r):
        return 6.0 * alpha * (r - 2.0 / 3.0)

    grid = np.linspace(1e-6, 1.0 - 1e-6, 4001)
    ratio = D(grid) / p(grid)
    i = int(np.argmin(ratio))
    rho, chi = float(grid[i]), float(ratio[i])
    if not np.isfinite(chi) or chi <= 0.0:
        raise DomainError("no double root of F in (0, 1) at this alpha")

    converged = False
    for _ in range(80):
        F = D(rho) - chi * p(rho)
        Fp = dD(rho) - chi * dp(rho)
        if abs(F) < tol and abs(Fp) < tol:
            converged = True
            break
        # Jacobian of (F, F') w.r.t. (rho, chi)
        j11, j12 = Fp, -p(rho)
        j21, j22 = 6.0 * alpha - chi * d2p(rho), -dp(rho)
        det = j11 * j22 - j12 * j21
        if det == 0.0:
            break
        drho = -(F * j22 - Fp * j12) / det
        dchi = -(Fp * j11 - F * j21) / det
        step = 1.0
        while abs(drho) * step > 0.1:  # damp large steps near the fold
            step *= 0.5
        rho_new = rho + step * drho
        chi_new = chi + step * dchi
        if not 0.0 < rho_new < 1.0 or chi_new <= 0.0:
            break
        rho, chi = rho_new, chi_new

    if not converged:
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, len(grid) - 1)]
        _, neg = _golden_max(lambda r: -D(r) / p(r), float(lo), float(hi))
        chi = -neg
    return chi


def stability_prefactor(L: float) -> float:
    return min(1.0, math.sqrt(L / 2.0))


def stability_predicates(rho_bar: float, params: ModelParams) -> dict[str, bool]:
    """Evaluate both sufficient-stability inequalities at a uniform state.

    ``global_decay``: chi0 * min(1, sqrt(L/2)) * max rho(1-rho)(1-alpha*rho)
    below the diffusivity floor 1 - 4*alpha/3 (global exponential decay to
    the mean for any data).  ``local_attractor``: the same prefactor times
    chi(rho_bar)*rho_bar below D(rho_bar) (local stability of this state).
    """
    _check_density(rho_bar, "rho_bar")
    pref = stability_prefactor(params.L)
    lhs1 = params.chi0 * pref * _occupancy_cubic_max(params.alpha)
    thm1 = lhs1 < 1.0 - 4.0 * params.alpha / 3.0
    lhs2 = pref * float(chemotactic_sensitivity(rho_bar, params)) * rho_bar
    thm2 = lhs2 < float(diffusivity(rho_bar, params))
    return {"global_decay": thm1, "local_attractor": thm2}
