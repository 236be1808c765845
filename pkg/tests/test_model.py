"""Model geometry: kernels, norms, and the norm-law machinery.

The Green-kernel oracle is the frozen product I_1(1) K_1(1) plus the
defining ODE itself: away from the diagonal every kernel column must
satisfy -G'' + (e^{2r} + n^2/4 - Xi) G = 0, checked by high-accuracy
centered differences.  Operator norms are cross-validated against dense
SVD, which shares no code with the block iteration.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ccresolvent.besselz import DEFAULT_QUADRATURE, QuadratureSpec
from ccresolvent.errors import (ConfigError, DegenerateDenominatorError,
                                DomainError, StabilityError)
from ccresolvent.model import (
    CrossSectionSpectrum,
    CutoffWeight,
    KernelMatrix,
    ModelManifold,
    OperatorNormResult,
    RadialGrid,
    SpectralPoint,
    XiRegion,
    check_product_bounds,
    green_kernel_Q,
    mode_kernel,
    operator_norm,
    reduce_to_Q,
    verify_prop_model,
    weighted_resolvent_norm,
)
from ccresolvent.model import DEFAULT_WEIGHT

I1K1 = 0.3401733509048675  # I_1(1) K_1(1), frozen from the series route


def small_grid(n=240):
    return RadialGrid.composite_gauss(-14.0, 2.0, n, 8)


def circle_model(count=4, n=2):
    return ModelManifold(n, CrossSectionSpectrum.circle(2 * math.pi, count))


class TestSpectralPoint:
    def test_from_xi_roundtrip(self):
        sp = SpectralPoint.from_xi(1.5 + 3.0j, 2)
        assert sp.k == 0.5 + 3.0j
        assert sp.Xi == (1.5 + 3.0j) * (2 - (1.5 + 3.0j))
        assert sp.n == 2.0

    def test_from_k_matches_from_xi(self):
        a = SpectralPoint.from_k(0.1 + 2.0j, 3)
        b = SpectralPoint.from_xi(1.5 + 0.1 + 2.0j, 3)
        assert abs(a.k - b.k) < 1e-15 and abs(a.Xi - b.Xi) < 1e-14

    def test_inconsistent_rejected(self):
        with pytest.raises(DomainError):
            SpectralPoint(xi=2.0 + 1.0j, k=1.0 + 1.0j, Xi=0.0)
        with pytest.raises(DomainError):
            SpectralPoint(xi=2.0 + 1.0j, k=1.0 + 2.0j, Xi=(2 + 1j) * -1j)


class TestSpectra:
    def test_circle_frequencies(self):
        spec = CrossSectionSpectrum.circle(2 * math.pi, 3)
        assert spec.entries == ((0.0, 1), (1.0, 2), (2.0, 2))

    def test_circle_length_scales(self):
        spec = CrossSectionSpectrum.circle(math.pi, 2)
        assert spec.entries[1] == (2.0, 2)

    def test_sphere_multiplicities(self):
        spec = CrossSectionSpectrum.round_sphere(2, 3)
        # S^2: l(l+1) eigenvalues with 2l+1 harmonics
        assert spec.entries[0] == (0.0, 1)
        assert spec.entries[1] == (math.sqrt(2.0), 3)
        assert spec.entries[2] == (math.sqrt(6.0), 5)

    def test_torus_square(self):
        spec = CrossSectionSpectrum.flat_torus((2 * math.pi, 2 * math.pi), 3)
        assert spec.entries[0] == (0.0, 1)
        assert spec.entries[1] == (1.0, 4)         # (+-1,0),(0,+-1)
        assert spec.entries[2][0] == pytest.approx(math.sqrt(2.0))
        assert spec.entries[2][1] == 4             # (+-1,+-1)

    def test_explicit_validation(self):
        with pytest.raises(ConfigError):
            CrossSectionSpectrum.explicit([(1.0, 1), (1.0, 2)])
        with pytest.raises(ConfigError):
            CrossSectionSpectrum.explicit([(-1.0, 1)])
        with pytest.raises(ConfigError):
            CrossSectionSpectrum.explicit([(1.0, 0)])
        with pytest.raises(ConfigError):
            CrossSectionSpectrum.explicit([])


class TestManifold:
    def test_validation(self):
        spec = CrossSectionSpectrum.explicit([(1.0, 1)])
        with pytest.raises(ConfigError):
            ModelManifold(0, spec)
        with pytest.raises(ConfigError):
            ModelManifold(2, spec, alpha0=-1.0)
        with pytest.raises(ConfigError):
            ModelManifold(2, spec, scaling_mode="other")

    def test_effective_order_plain(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]),
                          alpha0=2.0, scaling_mode="plain")
        sp = SpectralPoint.from_xi(1.0 + 3.0j, 2)
        assert m.effective_order(sp) == sp.k

    def test_effective_order_scaled_identity_at_one(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]))
        sp = SpectralPoint.from_xi(1.3 + 3.0j, 2)
        k = m.effective_order(sp)
        assert abs(k - sp.k) < 1e-12

    def test_effective_order_scaled(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]),
                          alpha0=1.5)
        sp = SpectralPoint.from_xi(1.0 + 3.0j, 2)
        k = m.effective_order(sp)
        # k^2 = n^2/4 - alpha0^2 Xi, branch near sp.k
        assert abs(k * k - (1.0 - 1.5 ** 2 * sp.Xi)) < 1e-12
        assert abs(k - sp.k) < abs(k + sp.k)


class TestReduceToQ:
    def test_shifts(self):
        m = circle_model(3)
        assert reduce_to_Q(m, 0) == (0.0, True)
        shift, zero = reduce_to_Q(m, 2)
        assert not zero and shift == pytest.approx(math.log(2.0))

    def test_out_of_range(self):
        m = circle_model(3)
        with pytest.raises(IndexError):
            reduce_to_Q(m, 3)
        with pytest.raises(IndexError):
            reduce_to_Q(m, -1)


class TestRadialGrid:
    def test_composite_gauss_integrates(self):
        g = RadialGrid.composite_gauss(-14.0, 2.0, 240, 8)
        assert float(g.weights @ np.exp(g.nodes)) == pytest.approx(
            math.exp(2.0) - math.exp(-14.0), rel=1e-12)

    def test_coverage_enforced(self):
        with pytest.raises(ConfigError):
            RadialGrid.composite_gauss(-8.0, 2.0, 160, 8)
        with pytest.raises(ConfigError):
            RadialGrid.composite_gauss(-14.0, 1.0, 160, 8)

    def test_shape_validation(self):
        with pytest.raises(ConfigError):
            RadialGrid(np.array([-12.0, -12.0, 3.0]), np.ones(3))
        with pytest.raises(ConfigError):
            RadialGrid(np.array([-12.0, 3.0]), np.array([1.0, -1.0]))


class TestCutoffWeight:
    def test_plateau_and_support(self):
        w = CutoffWeight()
        r = np.array([-5.0, -1.0, 1.0, 4.0])
        rho = w.rho(r)
        assert rho[0] == math.exp(-2.5) and rho[1] == math.exp(-0.5)
        assert rho[2] == 0.0 and rho[3] == 0.0

    def test_chi_monotone_and_c2(self):
        w = CutoffWeight()
        r = np.linspace(-1.5, 1.5, 301)
        chi = w.chi(r)
        assert np.all(np.diff(chi) <= 1e-15)
        # C^2 joints: slope and curvature vanish approaching +-1
        h = 1e-4
        for edge in (-1.0, 1.0):
            inside = edge - math.copysign(h, edge)
            slope = (w.chi(inside + h / 2) - w.chi(inside - h / 2)) / h
            assert abs(slope) < 1e-6

    def test_degree_pinned(self):
        with pytest.raises(ConfigError):
            CutoffWeight(degree=3)


class TestGreenKernel:
    def test_frozen_product(self):
        sp = SpectralPoint.from_k(1.0, 2)
        assert green_kernel_Q(sp, 0.0, 0.0) == pytest.approx(I1K1, rel=1e-12)

    def test_symmetry(self):
        sp = SpectralPoint.from_k(0.2 + 1.5j, 2)
        assert green_kernel_Q(sp, -1.3, 0.7) == green_kernel_Q(sp, 0.7, -1.3)

    def test_domain_guard(self):
        sp = SpectralPoint.from_k(-0.3 + 2.0j, 2)
        with pytest.raises(DomainError):
            green_kernel_Q(sp, 0.0, 0.0)

    def test_ode_residual_in_columns(self):
        # the defining equation is the independent oracle: away from the
        # diagonal -G'' + (e^{2r} + n^2/4 - Xi) G = 0 along each column
        quad = QuadratureSpec(rel_tol=1e-13)
        sp = SpectralPoint.from_xi(1.0 + 2.0j, 2)
        h = 1e-3
        t = -2.0
        for r in (-5.5, -3.7, -1.2, 0.3):
            gm = green_kernel_Q(sp, r - h, t, quad)
            g0 = green_kernel_Q(sp, r, t, quad)
            gp = green_kernel_Q(sp, r + h, t, quad)
            d2 = (gp - 2.0 * g0 + gm) / (h * h)
            pot = math.exp(2.0 * r) + 1.0 - sp.Xi
            resid = -d2 + pot * g0
            scale = abs(d2) + abs(pot * g0)
            assert abs(resid) / scale < 1e-6


class TestModeKernel:
    def test_matches_direct_green(self):
        m = circle_model(4)
        grid = small_grid()
        sp = SpectralPoint.from_k(0.1 + 2.0j, 2)
        km = mode_kernel(m, 1, sp, grid)
        w = DEFAULT_WEIGHT.rho(grid.nodes)
        for i, j in ((10, 200), (100, 100), (239, 0)):
            direct = green_kernel_Q(sp, float(grid.nodes[i]),
                                    float(grid.nodes[j])) * w[i] * w[j]
            assert abs(km.values[i, j] - direct) <= 1e-8 * max(abs(direct), 1e-12)

    def test_translation_covariance(self):
        # mode mu shifts both kernel arguments by ln mu
        m = circle_model(4)
        grid = small_grid()
        sp = SpectralPoint.from_k(0.1 + 2.0j, 2)
        km = mode_kernel(m, 2, sp, grid)   # mu = 2
        w = DEFAULT_WEIGHT.rho(grid.nodes)
        s = math.log(2.0)
        for i, j in ((30, 150), (110, 110), (220, 40)):
            direct = green_kernel_Q(sp, float(grid.nodes[i]) + s,
                                    float(grid.nodes[j]) + s) * w[i] * w[j]
            assert abs(km.values[i, j] - direct) <= 1e-8 * max(abs(direct), 1e-12)

    def test_zero_mode_values(self):
        m = circle_model(2)
        grid = small_grid()
        sp = SpectralPoint.from_k(1.0, 2)
        km = mode_kernel(m, 0, sp, grid)
        w = DEFAULT_WEIGHT.rho(grid.nodes)
        i = 100
        # diagonal kernel value 1/(2k) = 0.5 before weighting
        assert km.values[i, i] == pytest.approx(0.5 * w[i] * w[i], rel=1e-12)
        j = int(np.argmin(np.abs(grid.nodes - (grid.nodes[i] - math.log(2.0)))))
        expect = math.exp(-abs(grid.nodes[i] - grid.nodes[j])) / 2.0
        assert km.values[i, j] == pytest.approx(expect * w[i] * w[j], rel=1e-12)

    def test_zero_mode_pole(self):
        m = circle_model(2)
        with pytest.raises(DegenerateDenominatorError):
            mode_kernel(m, 0, SpectralPoint.from_k(0.0, 2), small_grid())

    def test_symmetric_matrix(self):
        m = circle_model(3)
        grid = small_grid(160)
        km = mode_kernel(m, 1, SpectralPoint.from_k(0.05 + 1.5j, 2), grid)
        scale = float(np.max(np.abs(km.values)))
        assert np.max(np.abs(km.values - km.values.T)) <= 1e-14 * scale


class TestOperatorNorm:
    def test_zero_kernel(self):
        grid = small_grid(160)
        km = KernelMatrix(grid, np.zeros((160, 160), dtype=complex))
        res = operator_norm(km)
        assert res.value == 0.0 and res.hilbert_schmidt == 0.0

    def test_rank_one_exact(self):
        grid = small_grid(160)
        f = np.exp(-grid.nodes ** 2 / 8.0)
        km = KernelMatrix(grid, np.outer(f, f).astype(complex))
        # rank one: norm equals the weighted mass of f x f
        expect = float(grid.weights @ (f * f))
        res = operator_norm(km)
        assert res.value == pytest.approx(expect, rel=1e-9)
        assert res.hilbert_schmidt == pytest.approx(expect, rel=1e-12)

    def test_matches_dense_svd(self):
        m = circle_model(3)
        grid = small_grid(160)
        km = mode_kernel(m, 1, SpectralPoint.from_k(0.1 + 2.0j, 2), grid)
        sw = np.sqrt(grid.weights)
        svd = float(np.linalg.svd(sw[:, None] * km.values * sw[None, :],
                                  compute_uv=False)[0])
        assert operator_norm(km).value == pytest.approx(svd, rel=1e-8)

    def test_hs_dominates_zero_mode(self):
        m = circle_model(2)
        grid = small_grid(160)
        km = mode_kernel(m, 0, SpectralPoint.from_k(1.0 + 5.0j, 2), grid)
        res = operator_norm(km)
        assert res.value <= res.hilbert_schmidt * (1.0 + 1e-9)


class TestResolventNorm:
    def test_preconditions(self):
        m = circle_model(2)
        grid = small_grid(160)
        with pytest.raises(DomainError):
            weighted_resolvent_norm(m, SpectralPoint.from_xi(0.7 + 3.0j, 2), 2, grid)
        with pytest.raises(DomainError):
            weighted_resolvent_norm(m, SpectralPoint.from_xi(1.2 + 0.5j, 2), 2, grid)
        with pytest.raises(DomainError):
            weighted_resolvent_norm(m, SpectralPoint.from_xi(1.2 + 3.0j, 2), 2, grid, p=3)

    def test_block_max_over_disjoint_spectra(self):
        # block-diagonal law: norm over a union spectrum is the max of the
        # norms over disjoint parts
        grid = small_grid(160)
        xi = 1.0 + 3.0j
        parts = ([(1.0, 1)], [(2.5, 1)])
        union = ModelManifold(2, CrossSectionSpectrum.explicit(parts[0] + parts[1]))
        got = weighted_resolvent_norm(union, SpectralPoint.from_xi(xi, 2), 2, grid)
        vals = []
        for part in parts:
            m = ModelManifold(2, CrossSectionSpectrum.explicit(part))
            vals.append(weighted_resolvent_norm(
                m, SpectralPoint.from_xi(xi, 2), 1, grid).value)
        assert got.value == pytest.approx(max(vals), rel=1e-9)

    def test_decreasing_along_im_xi(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1), (2.0, 1)]))
        grid = small_grid(320)
        vals = [weighted_resolvent_norm(
            m, SpectralPoint.from_xi(1.0 + 1e-6 + im * 1j, 2), 2, grid).value
            for im in (2.0, 4.0, 8.0, 16.0)]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        # measured law of the faithful kernels: |k|^{-1+p}
        slope = np.polyfit(np.log([2.0, 4.0, 8.0, 16.0]), np.log(vals), 1)[0]
        assert -1.35 < slope < -0.75

    def test_per_mode_and_truncation_fields(self):
        m = circle_model(3)
        grid = small_grid(160)
        res = weighted_resolvent_norm(m, SpectralPoint.from_xi(1.0 + 2.0j, 2), 3, grid)
        assert res.modes_used == len(res.per_mode) == 3
        assert res.value == max(res.per_mode)
        assert res.tail_bound == res.per_mode[-1]


class TestProductBounds:
    def test_refinement_stable(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]))
        grid = small_grid(400)
        rep = check_product_bounds(m, 0, SpectralPoint.from_k(1e-6 + 4.0j, 2), grid)
        assert {s.bound_id for s in rep.summaries} == {"I_times_K_tail",
                                                       "K_times_I_tail"}
        for s in rep.summaries:
            assert math.isfinite(s.sup_ratio) and s.sup_ratio > 0
            assert s.refinement_delta < 0.05 and s.passed
        assert len(rep.rows) == 2 * 400

    def test_rejects_zero_mode_and_bad_order(self):
        m = circle_model(2)
        grid = small_grid(160)
        with pytest.raises(DomainError):
            check_product_bounds(m, 0, SpectralPoint.from_k(1e-6 + 4.0j, 2), grid)
        m1 = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]))
        with pytest.raises(DomainError):
            check_product_bounds(m1, 0, SpectralPoint.from_k(0.4 + 4.0j, 2), grid)


class TestVerifyProp:
    def test_report_shape_and_honest_slopes(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1), (2.0, 1)]))
        grid = small_grid(320)
        region = XiRegion(1.0 + 1e-6, 1.0 + 1e-6, 2.0, 8.0)
        rep = verify_prop_model(m, region, (0, 1), 0, grid, J=2, samples=4)
        assert rep.columns == ("re_xi", "im_xi", "p", "q", "J", "norm",
                               "slope_window_id")
        assert len(rep.rows) == 8
        by_id = {s.bound_id: s for s in rep.summaries}
        # the faithful kernels follow |k|^{-1+p}; the -2+p target is not met
        s0 = by_id["norm_law_p0_q0"]
        assert -1.4 < s0.sup_ratio < -0.8
        assert s0.refinement_delta < 0.10
        assert not s0.passed
        assert -0.5 < by_id["norm_law_p1_q0"].sup_ratio < 0.2

    def test_q1_crosscheck(self):
        m = ModelManifold(2, CrossSectionSpectrum.explicit([(1.0, 1)]))
        grid = small_grid(320)
        region = XiRegion(1.0 + 1e-6, 1.0 + 1e-6, 2.0, 6.0)
        rep = verify_prop_model(m, region, 0, 1, grid, J=1, samples=3)
        by_id = {s.bound_id: s for s in rep.summaries}
        assert by_id["dxi_crosscheck_p0"].sup_ratio < 0.10
        assert by_id["dxi_crosscheck_p0"].passed

    def test_region_validation(self):
        m = circle_model(2)
        grid = small_grid(160)
        with pytest.raises(DomainError):
            verify_prop_model(m, XiRegion(0.7, 0.8, 2.0, 8.0), 0, 0, grid)
        with pytest.raises(DomainError):
            verify_prop_model(m, XiRegion(1.1, 1.2, 2.0, 8.0), 0, 2, grid)
        with pytest.raises(ConfigError):
            XiRegion(1.2, 1.1, 2.0, 8.0)


class TestScalingModeNorms:
    @given(st.floats(min_value=1.5, max_value=6.0))
    @settings(max_examples=10, deadline=None)
    def test_plain_mode_ignores_alpha0(self, im):
        spec = CrossSectionSpectrum.explicit([(1.0, 1)])
        a = ModelManifold(2, spec, alpha0=3.0, scaling_mode="plain")
        b = ModelManifold(2, spec, alpha0=1.0, scaling_mode="plain")
        sp = SpectralPoint.from_xi(1.1 + im * 1j, 2)
        assert a.effective_order(sp) == b.effective_order(sp)
