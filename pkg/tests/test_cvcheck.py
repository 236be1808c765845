"""Tests for the warped-metric checks.

The conjugated-potential oracle is symbolic differentiation of the same
printed expression (sympy), evaluated on the perturbed expansion; the
assumption-check anchors are closed-form (exact hyperbolic and cylinder
ends).  High-energy exponent windows are frozen from the power laws the
solves are expected to reproduce.
"""

import numpy as np
import pytest
import sympy as sp

from ccresolvent.cvcheck import (
    CVScanSpec,
    FourierAlpha,
    PolyhomExpansion,
    ProductGrid,
    WarpedMetric,
    check_assumptions,
    conjugated_potential,
    conjugation_identity_residual,
    energy_estimate_check,
    high_energy_resolvent_check,
    sigma_of_r,
)
from ccresolvent.errors import ConfigError, DomainError

CSV_COLUMNS = ("metric_id", "check_id", "r", "value", "bound", "margin")


def gauss_envelope(center, width=1.0):
    def u(r):
        return np.exp(-(((r - center) / width) ** 2))
    return u


class TestFourierAlpha:
    def test_constant_bounds(self):
        a = FourierAlpha(2.5)
        assert a.bounds() == (2.5, 2.5)
        assert a.is_constant

    def test_mode_bounds(self):
        a = FourierAlpha(1.0, ((1, 0.1, 0.0),))
        lo, hi = a.bounds()
        assert lo == pytest.approx(0.9, abs=1e-6)
        assert hi == pytest.approx(1.1, abs=1e-6)

    def test_nonpositive_rejected(self):
        with pytest.raises(ConfigError):
            FourierAlpha(0.5, ((1, 0.6, 0.0),))

    def test_bad_mode_index(self):
        with pytest.raises(ConfigError):
            FourierAlpha(1.0, ((0, 0.1, 0.0),))


class TestExpansion:
    def test_scalar_promotes(self):
        e = PolyhomExpansion(2.0)
        assert e.base.shape == (1, 1)
        assert e.dim == 1

    def test_asymmetric_rejected(self):
        with pytest.raises(ConfigError):
            PolyhomExpansion(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_bad_power_rejected(self):
        with pytest.raises(ConfigError):
            PolyhomExpansion(1.0, ((0, 0, np.eye(1)),))
        with pytest.raises(ConfigError):
            PolyhomExpansion(1.0, ((1, -1, np.eye(1)),))


class TestSigmaOfR:
    def test_pure_base_at_zero(self):
        # No correction terms: sigma(0) = e^0 h(1) = h0.
        m = WarpedMetric.hyperbolic(h0=3.0)
        val = sigma_of_r(m, 0.0)
        assert val.shape == (1, 1)
        assert val[0, 0] == pytest.approx(3.0, rel=1e-15)

    def test_single_term_shape(self):
        # sigma(r) = e^{2r} h0 + e^{r} (-r) h11 for the (i=1, j=1) term.
        m = WarpedMetric.perturbed_hyperbolic(i=1, j=1, amplitude=0.05)
        r = np.array([1.5, 3.0, 7.0])
        vals = sigma_of_r(m, r)[:, 0, 0]
        expected = np.exp(2 * r) + np.exp(r) * (-r) * 0.05
        assert np.allclose(vals, expected, rtol=1e-14)

    def test_large_r_limit_rate(self):
        # e^{-2r} sigma -> h0 at rate e^{-r} r, with coefficient -amp.
        # Extracting the O(e^{-r} r) drift from O(1) values loses ~8
        # digits to cancellation, hence the modest tolerance.
        m = WarpedMetric.perturbed_hyperbolic(i=1, j=1, amplitude=0.05)
        for r in (15.0, 20.0):
            drift = sigma_of_r(m, r)[0, 0] * np.exp(-2 * r) - 1.0
            assert drift / (np.exp(-r) * r) == pytest.approx(-0.05, rel=1e-6)

    def test_degeneracy_reported_with_location(self):
        # sigma(r) = e^r (e^r - 5) crosses zero at r = ln 5; below it the
        # boundary metric is fine but the cross-section tensor is not.
        exp = PolyhomExpansion(1.0, ((1, 0, -5.0 * np.eye(1)),))
        m = WarpedMetric(n=1, alpha=FourierAlpha(1.0), expansion=exp)
        with pytest.raises(DomainError, match="degenerates at r = 1"):
            sigma_of_r(m, 1.0)
        val = sigma_of_r(m, 2.0)
        assert val[0, 0] > 0.0

    def test_derivative_orders(self):
        m = WarpedMetric.hyperbolic()
        r = 2.0
        assert sigma_of_r(m, r, order=1)[0, 0] == pytest.approx(
            2.0 * np.exp(2 * r), rel=1e-14)
        assert sigma_of_r(m, r, order=2)[0, 0] == pytest.approx(
            4.0 * np.exp(2 * r), rel=1e-14)


class TestMetricValidation:
    def test_degenerate_boundary_rejected(self):
        with pytest.raises(ConfigError):
            WarpedMetric(n=1, alpha=FourierAlpha(1.0),
                         expansion=PolyhomExpansion(0.0))

    def test_inner_radius_floor(self):
        with pytest.raises(ConfigError):
            WarpedMetric.hyperbolic(a=0.5)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError):
            WarpedMetric(n=2, alpha=FourierAlpha(1.0),
                         expansion=PolyhomExpansion(1.0))

    def test_variable_alpha_needs_circle(self):
        with pytest.raises(ConfigError):
            WarpedMetric(n=2, alpha=FourierAlpha(1.0, ((1, 0.1, 0.0),)),
                         expansion=PolyhomExpansion(np.eye(2)))

    def test_cylinder_is_explicit_escape_hatch(self):
        cyl = WarpedMetric.cylinder()
        r = np.linspace(1.0, 40.0, 7)
        vals = sigma_of_r(cyl, r)[:, 0, 0]
        assert np.allclose(vals, 1.0, rtol=1e-12)


class TestConjugatedPotential:
    def test_warped_product_y_independent(self):
        m = WarpedMetric.hyperbolic()
        grid = ProductGrid.for_metric(m, nr=65, ny=8)
        pot = conjugated_potential(m, grid)
        assert np.all(pot.q0 == pot.q0[:, :1])
        assert np.all(pot.first_order == 0.0)

    def test_hyperbolic_constant_value(self):
        # p = e^{nr} sqrt(h0) makes the printed potential the constant
        # -n^2/4 (the radial Laplacian term cancels exactly).
        for n in (1, 2):
            m = WarpedMetric.hyperbolic(n=n, h0=2.0)
            grid = ProductGrid.for_metric(m, nr=33, ny=1)
            pot = conjugated_potential(m, grid)
            assert np.allclose(pot.q0, -n**2 / 4.0, rtol=1e-12)

    def test_symbolic_oracle_on_perturbed_expansion(self):
        amp = 0.05
        m = WarpedMetric.perturbed_hyperbolic(i=1, j=1, amplitude=amp)
        grid = ProductGrid.for_metric(m, nr=129, ny=1)
        pot = conjugated_potential(m, grid)

        r = sp.symbols("r", positive=True)
        sigma = sp.exp(2 * r) + sp.exp(r) * (-r) * amp
        p = sp.sqrt(sigma)
        inv = 1 / p
        lap_inv = -sp.diff(inv, r, 2) - (sp.diff(p, r) / p) * sp.diff(inv, r)
        q_sym = -(sp.diff(p, r) ** 2) / (4 * p**2) + p * lap_inv / 2
        oracle = sp.lambdify(r, sp.simplify(q_sym), "numpy")(grid.r)
        rel = np.abs(pot.q0[:, 0] - oracle) / np.abs(oracle).max()
        assert rel.max() < 1e-8

    def test_first_order_field(self):
        mv = WarpedMetric(n=1, alpha=FourierAlpha(1.0, ((1, 0.1, 0.0),)),
                          expansion=PolyhomExpansion(1.0))
        grid = ProductGrid.for_metric(mv, nr=33, ny=16)
        pot = conjugated_potential(mv, grid)
        assert np.abs(pot.first_order).max() > 0.0

    def test_variable_alpha_needs_y_resolution(self):
        mv = WarpedMetric(n=1, alpha=FourierAlpha(1.0, ((1, 0.1, 0.0),)),
                          expansion=PolyhomExpansion(1.0))
        grid = ProductGrid.for_metric(mv, nr=33, ny=2)
        with pytest.raises(ConfigError):
            conjugated_potential(mv, grid)

    def test_identity_residual_flags_printed_form(self):
        # The printed potential does not reproduce direct conjugation
        # (constant offset of order (p'/2p)^2 (1 + alpha^2)); the residual
        # hook makes the disagreement visible instead of hiding it.
        m = WarpedMetric.hyperbolic()
        grid = ProductGrid.for_metric(m, nr=513, ny=1)
        res = conjugation_identity_residual(m, grid)
        assert res > 0.1
        pot = conjugated_potential(m, grid)
        assert any("p_sigma" in note for note in pot.notes)


class TestCheckAssumptions:
    def test_hyperbolic_form_constant(self):
        m = WarpedMetric.hyperbolic()
        grid = ProductGrid.for_metric(m, nr=257, ny=1)
        rep = check_assumptions(m, grid, CVScanSpec())
        c = rep.summary("assump2_form_constant")
        assert c.sup_ratio == pytest.approx(2.0, abs=1e-6)
        assert c.passed
        assert rep.summary("assump2_rate_floor").sup_ratio == pytest.approx(
            2.0, abs=1e-12)
        assert rep.summary("assump1_q_bound").sup_ratio == pytest.approx(
            0.25, rel=1e-9)
        assert abs(rep.summary("assump1_dq_decay").sup_ratio) < 1e-6

    def test_cylinder_fails_with_zero(self):
        cyl = WarpedMetric.cylinder()
        grid = ProductGrid.for_metric(cyl, nr=257, ny=1)
        rep = check_assumptions(cyl, grid, CVScanSpec())
        c = rep.summary("assump2_form_constant")
        assert c.sup_ratio == 0.0
        assert not c.passed
        assert not rep.passed()

    def test_perturbed_constants(self):
        m = WarpedMetric.perturbed_hyperbolic(a=2.0)
        grid = ProductGrid.for_metric(m, nr=257, ny=1)
        rep = check_assumptions(m, grid, CVScanSpec())
        floor = rep.summary("assump2_rate_floor").sup_ratio
        assert abs(floor - 2.0) / 2.0 < 0.10
        # The bisected constant scales with the grid's left edge (min of
        # r * rate over r >= 2), here 2 * 2.00688 from the closed form.
        form = rep.summary("assump2_form_constant").sup_ratio
        assert form == pytest.approx(4.01376, abs=2e-3)
        assert rep.passed()

    def test_report_shape(self):
        m = WarpedMetric.hyperbolic()
        grid = ProductGrid.for_metric(m, nr=65, ny=1)
        rep = check_assumptions(m, grid, CVScanSpec())
        assert rep.columns == CSV_COLUMNS
        assert len(rep.rows) == 3 * 65
        ids = {row[1] for row in rep.rows}
        assert ids == {"assump1_q", "assump1_dq", "assump2"}

    def test_partial_grid_rejected(self):
        m = WarpedMetric.hyperbolic()
        grid = ProductGrid(np.linspace(5.0, 20.0, 64), np.zeros(1))
        with pytest.raises(ConfigError):
            check_assumptions(m, grid, CVScanSpec())


class TestEnergyEstimate:
    def test_zero_function_trivially_passes(self):
        m = WarpedMetric.hyperbolic()
        rep = energy_estimate_check(m, lambda r: np.zeros_like(r),
                                    CVScanSpec(lambdas=(8.0, 16.0)))
        assert rep.passed()
        assert all(row[3] == 0.0 for row in rep.rows)

    def test_bump_lambda_stable(self):
        m = WarpedMetric.hyperbolic()
        rep = energy_estimate_check(m, gauss_envelope(10.0),
                                    CVScanSpec(lambdas=(8.0, 16.0, 32.0)))
        st = rep.summary("energy_C1_stability_s0.6")
        assert st.passed
        assert st.refinement_delta < 2.0
        assert st.sup_ratio > 0.0

    def test_boundary_pairing_exactly_zero(self):
        m = WarpedMetric.hyperbolic()
        rep = energy_estimate_check(m, gauss_envelope(10.0),
                                    CVScanSpec(lambdas=(8.0, 16.0)))
        b = rep.summary("energy_boundary_pairing")
        assert b.sup_ratio == 0.0
        assert b.passed

    def test_endpoint_weight_runs(self):
        m = WarpedMetric.hyperbolic()
        rep = energy_estimate_check(m, gauss_envelope(10.0),
                                    CVScanSpec(lambdas=(8.0, 16.0, 32.0), s=0.75))
        st = rep.summary("energy_C1_stability_s0.75")
        assert st.passed

    def test_support_touching_edge_rejected(self):
        m = WarpedMetric.hyperbolic()
        with pytest.raises(DomainError, match="support"):
            energy_estimate_check(m, gauss_envelope(1.0),
                                  CVScanSpec(lambdas=(8.0,)))


class TestHighEnergy:
    def test_hyperbolic_p0_window(self):
        rep = high_energy_resolvent_check(
            WarpedMetric.hyperbolic(), CVScanSpec(), p=0)
        s = rep.summary("cv2_exponent_p0")
        assert -1.2 < s.sup_ratio < -0.8
        assert s.refinement_delta < 0.1
        assert s.passed

    def test_hyperbolic_p1_window(self):
        rep = high_energy_resolvent_check(
            WarpedMetric.hyperbolic(), CVScanSpec(), p=1)
        s = rep.summary("cv2_exponent_p1")
        assert -0.2 < s.sup_ratio < 0.2
        assert s.passed

    def test_perturbed_p0_window(self):
        rep = high_energy_resolvent_check(
            WarpedMetric.perturbed_hyperbolic(), CVScanSpec(), p=0)
        s = rep.summary("cv2_exponent_p0")
        assert -1.2 < s.sup_ratio < -0.8
        assert s.refinement_delta < 0.1

    def test_variable_alpha_coupled_modes(self):
        mv = WarpedMetric(n=1, alpha=FourierAlpha(1.0, ((1, 0.1, 0.0),)),
                          expansion=PolyhomExpansion(1.0), label="variable")
        rep = high_energy_resolvent_check(
            mv, CVScanSpec(lambdas=(4.0, 8.0, 16.0)), p=0)
        s = rep.summary("cv2_exponent_p0")
        assert s.sup_ratio <= -0.8

    def test_rejects_higher_p(self):
        with pytest.raises(DomainError):
            high_energy_resolvent_check(WarpedMetric.hyperbolic(),
                                        CVScanSpec(), p=2)

    def test_needs_two_lambdas(self):
        with pytest.raises(ConfigError):
            high_energy_resolvent_check(
                WarpedMetric.hyperbolic(), CVScanSpec(lambdas=(8.0,)), p=0)


class TestScanSpecValidation:
    def test_weight_exponent_range(self):
        with pytest.raises(ConfigError):
            CVScanSpec(s=0.5)
        with pytest.raises(ConfigError):
            CVScanSpec(s=0.76)

    def test_lambda_floor(self):
        with pytest.raises(ConfigError):
            CVScanSpec(lambdas=(0.5, 2.0))

    def test_lambda_ordering(self):
        with pytest.raises(ConfigError):
            CVScanSpec(lambdas=(8.0, 4.0))
