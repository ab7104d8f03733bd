import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from celltaxis.model import (
    DomainError,
    ModelParams,
    NoUnstableModeError,
    chemotactic_sensitivity,
    classify_region,
    critical_curve_chi0,
    diffusivity,
    dispersion_rate,
    dominant_wavemode,
    primitive_G,
    primitive_K,
    stability_predicates,
    unstable_interval,
)


def P(alpha=0.95, chi0=16.0, L=8.0, **kw):
    """Params with jump values adapted to straddle whatever interval alpha
    produces (the defaults only straddle up to alpha ~ 0.98)."""
    if "jump_low" not in kw and alpha > 0.75:
        iv_lo = (2 * alpha - math.sqrt(alpha * (4 * alpha - 3))) / (3 * alpha)
        iv_hi = (2 * alpha + math.sqrt(alpha * (4 * alpha - 3))) / (3 * alpha)
        kw["jump_low"] = 0.5 * iv_lo
        kw["jump_high"] = min(0.5 * (iv_hi + 1.0), 1.0 - 1e-9)
    return ModelParams(alpha=alpha, chi0=chi0, L=L, **kw)


class TestParams:
    def test_ranges_validated(self):
        with pytest.raises(DomainError):
            ModelParams(alpha=1.5, chi0=1.0, L=8.0)
        with pytest.raises(DomainError):
            ModelParams(alpha=0.5, chi0=-1.0, L=8.0)
        with pytest.raises(DomainError):
            ModelParams(alpha=0.5, chi0=1.0, L=0.0)
        with pytest.raises(DomainError):
            ModelParams(alpha=0.5, chi0=1.0, L=8.0, jump_low=0.9, jump_high=0.5)

    def test_jump_values_must_straddle_unstable_interval(self):
        with pytest.raises(DomainError):
            ModelParams(alpha=0.95, chi0=1.0, L=8.0, jump_low=0.5, jump_high=0.99)
        ModelParams(alpha=0.95, chi0=1.0, L=8.0)  # defaults straddle


class TestDiffusivity:
    @given(st.floats(0.0, 1.0))
    def test_zero_density_gives_unity(self, alpha):
        assert float(diffusivity(0.0, P(alpha=alpha))) == pytest.approx(1.0, abs=1e-14)

    def test_vertex_value(self):
        assert float(diffusivity(2.0 / 3.0, P())) == pytest.approx(
            1.0 - 4.0 * 0.95 / 3.0, abs=1e-14
        )

    def test_saturated_density(self):
        # direct evaluation: 3a/9 + 1 - 4a/3 = 1 - a
        assert float(diffusivity(1.0, P())) == pytest.approx(0.05, abs=1e-14)

    def test_out_of_range_raises(self):
        with pytest.raises(DomainError):
            diffusivity(1.2, P())

    @given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
    def test_floor_at_vertex(self, alpha, rho):
        p = P(alpha=alpha)
        assert float(diffusivity(rho, p)) >= 1.0 - 4.0 * alpha / 3.0 - 1e-12


class TestSensitivity:
    def test_volume_filling_vanishes_at_saturation(self):
        assert float(chemotactic_sensitivity(1.0, P())) == 0.0

    def test_empty_site_gives_chi0(self):
        assert float(chemotactic_sensitivity(0.0, P(chi0=7.5))) == 7.5

    def test_hand_value(self):
        # 16 * 0.5 * (1 - 0.95/2) = 4.2
        assert float(chemotactic_sensitivity(0.5, P())) == pytest.approx(4.2, abs=1e-12)


class TestUnstableInterval:
    def test_below_threshold_none(self):
        assert unstable_interval(P(alpha=0.5)) is None
        assert unstable_interval(P(alpha=0.75)) is None

    def test_full_adhesion(self):
        iv = unstable_interval(P(alpha=1.0))
        assert iv.lo == pytest.approx(1.0 / 3.0, abs=1e-12)
        assert iv.hi == pytest.approx(1.0, abs=1e-12)

    def test_benchmark_alpha(self):
        iv = unstable_interval(P(alpha=0.95))
        assert iv.lo == pytest.approx(0.361, abs=1e-3)
        assert iv.hi == pytest.approx(0.973, abs=1e-3)

    @given(st.floats(0.7501, 1.0))
    def test_roots_of_diffusivity_bracket_vertex(self, alpha):
        p = P(alpha=alpha)
        iv = unstable_interval(p)
        assert iv.lo < 2.0 / 3.0 < iv.hi
        assert float(diffusivity(iv.lo, p)) == pytest.approx(0.0, abs=1e-10)
        assert float(diffusivity(iv.hi, p)) == pytest.approx(0.0, abs=1e-10)

    def test_negative_exactly_inside(self):
        p = P(alpha=0.9)
        iv = unstable_interval(p)
        rho = np.linspace(0.0, 1.0, 2001)
        D = diffusivity(rho, p)
        inside = (rho > iv.lo + 1e-9) & (rho < iv.hi - 1e-9)
        assert np.all(D[inside] < 0.0)
        assert np.all(D[~inside] >= -1e-12)

    def test_width_nondecreasing_in_alpha(self):
        widths = [
            unstable_interval(P(alpha=a)).width
            for a in np.linspace(0.7501, 1.0, 40)
        ]
        assert np.all(np.diff(widths) >= -1e-14)


class TestDispersion:
    def test_pure_diffusion_decays(self):
        p = P(alpha=0.5, chi0=0.0)
        lam = dispersion_rate(1, 0.4, p)
        D = float(diffusivity(0.4, p))
        assert lam == pytest.approx(-D * math.pi**2 / 64.0, rel=1e-12)
        assert lam < 0.0

    def test_unstable_interval_long_waves_grow(self):
        p = P(alpha=0.95, chi0=16.0)
        assert dispersion_rate(1, 0.5, p) > 0.0

    def test_hand_value(self):
        # direct substitution: q2 = (pi/8)^2, D = 1, chi*rho = 16*0.75*0.25 = 3
        p = P(alpha=0.0, chi0=16.0)
        q2 = (math.pi / 8.0) ** 2
        expected = q2 * (-1.0 + 3.0 / (1.0 + q2))
        assert dispersion_rate(1, 0.25, p) == pytest.approx(expected, rel=1e-14)
        assert expected == pytest.approx(0.2466, abs=2e-4)


class TestDominantWavemode:
    def test_marginal_gives_zero(self):
        # chi(rho)*rho = D(rho) exactly at rho=1/2, alpha=0, chi0=4
        p = P(alpha=0.0, chi0=4.0)
        assert dominant_wavemode(0.5, p) == pytest.approx(0.0, abs=1e-12)

    def test_quadruple_ratio_gives_unit_mode(self):
        # chi*rho = 4 D => sqrt(4) - 1 = 1
        p = P(alpha=0.0, chi0=16.0)
        assert dominant_wavemode(0.5, p) == pytest.approx(1.0, rel=1e-12)

    def test_matches_argmax_of_dispersion(self):
        p = P(alpha=0.0, chi0=16.0)
        rho_bar = 0.25
        q_star = dominant_wavemode(rho_bar, p)
        ks = np.linspace(1e-3, 10.0, 200001)  # continuous wavenumber scan
        L = p.L
        q2 = (ks * math.pi / L) ** 2
        D = float(diffusivity(rho_bar, p))
        chir = float(chemotactic_sensitivity(rho_bar, p)) * rho_bar
        lam = q2 * (-D + chir / (1.0 + q2))
        k_best = ks[np.argmax(lam)] * math.pi / L
        assert q_star == pytest.approx(k_best, abs=5e-4)

    def test_errors(self):
        with pytest.raises(NoUnstableModeError):
            dominant_wavemode(0.5, P(alpha=0.0, chi0=1.0))
        with pytest.raises(DomainError):
            dominant_wavemode(0.5, P(alpha=0.95, chi0=16.0))  # D < 0


class TestPrimitiveK:
    def test_normalisation(self):
        for alpha in (0.0, 0.3, 0.95, 1.0):
            assert float(primitive_K(0.0, P(alpha=alpha))) == pytest.approx(
                0.0, abs=1e-15
            )

    def test_identity_when_linear(self):
        assert float(primitive_K(0.5, P(alpha=0.0))) == pytest.approx(0.5, abs=1e-15)

    def test_derivative_is_diffusivity(self):
        rng = np.random.default_rng(7)
        p = P(alpha=0.87)
        eps = 1e-6
        for rho in rng.uniform(0.01, 0.99, 100):
            dk = (
                float(primitive_K(rho + eps, p)) - float(primitive_K(rho - eps, p))
            ) / (2 * eps)
            assert dk == pytest.approx(float(diffusivity(rho, p)), abs=1e-8)


class TestPrimitiveG:
    def test_base_point(self):
        assert primitive_G(0.5, P()) == 0.0

    def test_strictly_increasing_below_threshold(self):
        p = P(alpha=0.5, chi0=2.0)
        assert primitive_G(0.6, p) > primitive_G(0.4, p)

    def test_closed_form_linear_case(self):
        p = P(alpha=0.0, chi0=1.0)
        for rho in (0.25, 0.75):
            exact = math.log(rho / (1.0 - rho))
            assert primitive_G(rho, p) == pytest.approx(exact, abs=1e-8)

    def test_singular_endpoints_raise(self):
        with pytest.raises(DomainError):
            primitive_G(0.0, P())
        with pytest.raises(DomainError):
            primitive_G(1.0, P())

    def test_derivative_identity(self):
        # G'(rho) * chi(rho) * rho = D(rho)
        p = P(alpha=0.6, chi0=5.0)
        eps = 1e-6
        for rho in (0.2, 0.45, 0.7, 0.9):
            dg = (primitive_G(rho + eps, p) - primitive_G(rho - eps, p)) / (2 * eps)
            lhs = dg * float(chemotactic_sensitivity(rho, p)) * rho
            assert lhs == pytest.approx(float(diffusivity(rho, p)), abs=1e-7)


def _min_F_on_grid(alpha, chi0, m=20001):
    rho = np.linspace(0.0, 1.0, m)
    D = 3 * alpha * (rho - 2 / 3) ** 2 + 1 - 4 * alpha / 3
    return float(np.min(D - chi0 * (1 - rho) * (1 - alpha * rho) * rho))


def _critical_chi0_bisection(alpha, lo=1e-3, hi=100.0, iters=80):
    """Independent oracle: bisect chi0 on 'min_rho F(rho) crosses zero'."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if _min_F_on_grid(alpha, mid) < 0.0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


class TestRegions:
    def test_high_adhesion_is_region_iv(self):
        for chi0 in (0.0, 1.0, 16.0):
            assert classify_region(0.95, chi0) == "IV"

    def test_zero_drive_is_region_i(self):
        assert classify_region(0.0, 0.0) == "I"

    def test_boundary_between_ii_and_iii(self):
        chi_star = _critical_chi0_bisection(0.0)
        assert classify_region(0.0, chi_star * 0.99) in ("I", "II")
        assert classify_region(0.0, chi_star * 1.01) == "III"

    def test_region_ii_exists(self):
        # between the global-decay bound and the double-root curve; the two
        # boundaries only coincide at alpha = 0
        alpha = 0.5
        rho = np.linspace(0.0, 1.0, 20001)
        pmax = float(np.max(rho * (1 - rho) * (1 - alpha * rho)))
        chi_lo = (1 - 4 * alpha / 3) / pmax
        chi_hi = critical_curve_chi0(alpha)
        assert chi_lo < chi_hi
        assert classify_region(alpha, 0.5 * (chi_lo + chi_hi)) == "II"


class TestCriticalCurve:
    def test_against_bisection_oracle(self):
        for alpha in (0.0, 0.5):
            oracle = _critical_chi0_bisection(alpha)
            assert critical_curve_chi0(alpha) == pytest.approx(oracle, rel=1e-6)

    def test_linear_case_exact(self):
        # alpha = 0: F = 1 - chi0*rho*(1-rho), double root at rho=1/2, chi0=4
        assert critical_curve_chi0(0.0) == pytest.approx(4.0, rel=1e-10)

    def test_double_root_property(self):
        for alpha in (0.2, 0.6):
            chi = critical_curve_chi0(alpha)
            assert abs(_min_F_on_grid(alpha, chi, m=200001)) < 1e-8

    def test_finite_positive_on_range(self):
        for alpha in np.arange(0.0, 0.71, 0.1):
            chi = critical_curve_chi0(float(alpha))
            assert np.isfinite(chi) and chi > 0.0

    def test_out_of_range_raises(self):
        with pytest.raises(DomainError):
            critical_curve_chi0(0.9)


class TestStabilityPredicates:
    def test_zero_chemotaxis_both_true(self):
        preds = stability_predicates(0.4, P(alpha=0.5, chi0=0.0))
        assert preds["global_decay"] and preds["local_attractor"]

    def test_negative_diffusivity_fails_local(self):
        preds = stability_predicates(0.5, P(alpha=0.95, chi0=0.1))
        assert not preds["local_attractor"]

    def test_local_without_global(self):
        # chi0 = 5 > 4 breaks the global bound at alpha = 0, but a dilute
        # state is still a local attractor
        preds = stability_predicates(0.05, P(alpha=0.0, chi0=5.0))
        assert preds["local_attractor"] and not preds["global_decay"]
