import math

import numpy as np
import pytest

import covcurv as cc
from covcurv.moments import MomentSet
from covcurv.predictions import (
    curve_curvature_average,
    descriptors_from_invariants,
    empirical_ratios,
    normalized_curvature_scalars,
    normalized_principal_values,
    predict_barycenter,
    predict_eigenvalues,
    predict_generic_cyl_eigs,
    predict_ratio_limits,
    predict_volume,
)
from covcurv.spectra import EigenDecomposition, loglog_slope, sym_eig
from covcurv.sphere_integrals import ball_volume
from conftest import EPS_SWEEP, random_sff


def summary(chart):
    return cc.curvature_summary(cc.second_fundamental_form(chart))


class TestPredictVolume:
    def test_plane_exact(self, plane):
        cs = summary(plane)
        for kind in ("cylindrical", "spherical"):
            assert predict_volume(cs, 0.2, 2, kind) == pytest.approx(
                ball_volume(2, 0.2), rel=1e-14)

    def test_sphere_closed_forms(self, unit_sphere):
        cs = summary(unit_sphere)
        eps = 0.1
        assert predict_volume(cs, eps, 2, "cylindrical") == pytest.approx(
            math.pi * eps**2 * (1 + eps**2 / 4), rel=1e-13)
        assert predict_volume(cs, eps, 2, "spherical") == pytest.approx(
            math.pi * eps**2, rel=1e-13)  # coefficient |H|^2 - 2R = 0


class TestPredictBarycenter:
    def test_plane_zero(self, plane):
        np.testing.assert_array_equal(predict_barycenter(summary(plane), 0.1, 2, "spherical"),
                                      np.zeros(3))

    def test_sphere_normal_component(self, unit_sphere):
        s = predict_barycenter(summary(unit_sphere), 0.2, 2, "cylindrical")
        np.testing.assert_allclose(s, [0.0, 0.0, 0.2**2 / 4.0], atol=1e-15)

    def test_minimal_codim2(self, saddle):
        s = predict_barycenter(summary(saddle), 0.2, 2, "spherical")
        np.testing.assert_array_equal(s, np.zeros(4))


class TestPredictEigenvalues:
    def test_plane(self, plane):
        pred = predict_eigenvalues(summary(plane), 0.1, 2, 1, "cylindrical")
        np.testing.assert_allclose(pred.tangent, ball_volume(2, 0.1) * 0.1**2 / 4.0, rtol=1e-14)
        np.testing.assert_array_equal(pred.normal, [0.0])

    def test_sphere_cylindrical(self, unit_sphere):
        eps = 0.1
        pred = predict_eigenvalues(summary(unit_sphere), eps, 2, 1, "cylindrical")
        want_t = math.pi * eps**4 / 4 + math.pi * eps**6 / 12
        np.testing.assert_allclose(pred.tangent, want_t, rtol=1e-13)
        assert pred.normal[0] == pytest.approx(math.pi * eps**6 / 12, rel=1e-13)

    def test_sphere_spherical(self, unit_sphere):
        eps = 0.1
        pred = predict_eigenvalues(summary(unit_sphere), eps, 2, 1, "spherical")
        want_t = math.pi * eps**2 * (eps**2 / 4 - eps**4 / 24)
        np.testing.assert_allclose(pred.tangent, want_t, rtol=1e-13)
        assert pred.normal[0] == pytest.approx(math.pi * eps**6 / 48, rel=1e-13)

    def test_operators_exposed(self, paraboloid):
        cs = summary(paraboloid)
        pred = predict_eigenvalues(cs, 0.1, 2, 1, "cylindrical")
        np.testing.assert_allclose(pred.tangent_op, 5 * np.eye(2) + 2 * np.diag([1.0, 4.0]))
        np.testing.assert_allclose(pred.normal_op, [[9.0 + 10.0]])
        pred_s = predict_eigenvalues(cs, 0.1, 2, 1, "spherical")
        np.testing.assert_allclose(pred_s.tangent_op, np.eye(2) - 4 * np.diag([3.0, 6.0]))
        np.testing.assert_allclose(pred_s.normal_op, [[5.0 - 9.0 / 4.0]])


class TestGenericCylinderEigs:
    def test_unit_axes_match_tangent_leading(self, paraboloid):
        eps = 0.1
        lam_t, lam_n = predict_generic_cyl_eigs([1.0, 1.0], eps, 2, 1)
        lead = predict_eigenvalues(summary(paraboloid), eps, 2, 1, "cylindrical")
        np.testing.assert_allclose(lam_t, ball_volume(2, eps) * eps**2 / 4.0, rtol=1e-14)
        np.testing.assert_allclose(lam_t, lead.tangent, rtol=0.02)  # leading term only
        np.testing.assert_array_equal(lam_n, [0.0])

    def test_tilted_axes_closed_form(self):
        eps, ell = 0.1, np.array([2.0 / math.sqrt(3.0), 1.0])
        lam_t, _ = predict_generic_cyl_eigs(ell, eps, 2, 1)
        want = [eps**4 * (4.0 / 3.0) * math.pi * (2.0 / math.sqrt(3.0)) / 4.0,
                eps**4 * math.pi * (2.0 / math.sqrt(3.0)) / 4.0]
        np.testing.assert_allclose(lam_t, want, rtol=1e-12)

    def test_positive_axes_required(self):
        with pytest.raises(ValueError):
            predict_generic_cyl_eigs([1.0, -0.5], 0.1, 2, 1)


class TestRatioLimits:
    def test_sphere_degenerate(self, unit_sphere):
        pair, _ = predict_ratio_limits(summary(unit_sphere), 2, "cylindrical")
        np.testing.assert_allclose(pair, 0.0, atol=1e-14)

    def test_paraboloid_limits(self, paraboloid):
        cs = summary(paraboloid)
        pair_c, nsum_c = predict_ratio_limits(cs, 2, "cylindrical")
        assert pair_c[0, 1] == pytest.approx(-2.0, abs=1e-13)
        assert nsum_c == pytest.approx(4.0 * (9.0 + 10.0) / 24.0, abs=1e-13)
        pair_s, nsum_s = predict_ratio_limits(cs, 2, "spherical")
        assert pair_s[0, 1] == pytest.approx(1.0, abs=1e-13)
        assert nsum_s == pytest.approx(4.0 * (5.0 - 9.0 / 4.0) / 12.0, abs=1e-13)

    def test_empirical_convergence(self, sweep_cache):
        for kind, want in (("cylindrical", -2.0), ("spherical", 1.0)):
            rep = sweep_cache("paraboloid", kind)
            tail = rep.rows[-1]
            pair, _ = empirical_ratios(tail.eig, 2, tail.eps, kind)
            assert pair[0, 1] == pytest.approx(want, rel=0.05)

    def test_normal_sum_consistency_random_hypersurfaces(self):
        # the two closed forms agree with direct substitution on random sff
        rng = np.random.default_rng(77)
        for _ in range(40):
            n = int(rng.integers(2, 5))
            cs = cc.curvature_summary(random_sff(rng, n, 1))
            _, nsum_c = predict_ratio_limits(cs, n, "cylindrical")
            want_c = (n + 2) * (cs.H_norm_sq + 2 * cs.tr_III) / (4.0 * (n + 4))
            assert nsum_c == pytest.approx(want_c, rel=1e-12)
            _, nsum_s = predict_ratio_limits(cs, n, "spherical")
            want_s = (n + 2) * (cs.tr_III - cs.H_norm_sq / (n + 2)) / (2.0 * (n + 4))
            assert nsum_s == pytest.approx(want_s, rel=1e-12)


class TestCurveCurvatureAverage:
    def test_plane(self, plane):
        assert curve_curvature_average(summary(plane), 0.1, 2) == 0.0

    def test_sphere(self, unit_sphere):
        # (3 |H|^2 - 2 R) / ((n+2)(n+4)) = (12 - 4) / 24 = 1/3
        got = curve_curvature_average(summary(unit_sphere), 0.3, 2)
        assert got == pytest.approx(0.3**4 / 3.0, rel=1e-13)

    def test_minimal_codim2(self, saddle):
        got = curve_curvature_average(summary(saddle), 0.3, 2)
        assert got == pytest.approx(0.3**4 / 3.0, rel=1e-13)  # (0 + 8) / 24


def truncated_series_moments(cs, eps, n, kind):
    """MomentSet/eigen pair built from the two-term expansions themselves
    (principal-axis frame), for round-trip inversion tests."""
    pred = predict_eigenvalues(cs, eps, n, 1, kind)
    V = predict_volume(cs, eps, n, kind)
    s = predict_barycenter(cs, eps, n, kind)
    lam = np.concatenate([pred.tangent, pred.normal])
    eig = EigenDecomposition(eigenvalues=lam, eigenvectors=pred.vectors)
    ref = "barycenter" if kind == "spherical" else "center"
    return MomentSet(V=V, s=s, C=np.diag(lam), reference=ref, quad_error=0.0), eig


class TestDescriptorInversion:
    def test_sphere_exact_series_round_trip(self, unit_sphere):
        cs = summary(unit_sphere)
        mom, eig = truncated_series_moments(cs, 0.2, 2, "spherical")
        rep = descriptors_from_invariants(mom, eig, 0.2, 2, "spherical")
        assert rep.scalar_curvature == pytest.approx(2.0, abs=1e-12)
        assert rep.mean_curvature == pytest.approx(2.0, abs=1e-12)
        np.testing.assert_allclose(rep.principal_values, 1.0, atol=1e-12)

    @pytest.mark.parametrize("kind", ["cylindrical", "spherical"])
    def test_random_hypersurface_round_trip(self, kind):
        rng = np.random.default_rng(101)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            sff = random_sff(rng, n, 1)
            cs = cc.curvature_summary(sff)
            if abs(cs.H[0]) < 0.3:  # keep the spherical kappa division well posed
                continue
            eps = 0.05
            mom, eig = truncated_series_moments(cs, eps, n, kind)
            rep = descriptors_from_invariants(mom, eig, eps, n, kind)
            assert rep.scalar_curvature == pytest.approx(cs.scalar, abs=1e-9)
            assert rep.mean_curvature**2 == pytest.approx(cs.H_norm_sq, abs=1e-9)
            kappa = np.sort(np.linalg.eigvalsh(sff.kappa[0]))[::-1]
            if kind == "spherical":
                got = np.sort(rep.principal_values * rep.orientation_sign
                              * np.sign(cs.H[0]))[::-1]
                np.testing.assert_allclose(got, kappa, atol=1e-9)
            else:
                np.testing.assert_allclose(np.sort(rep.principal_values)[::-1],
                                           np.sort(kappa**2)[::-1], atol=1e-9)

    def test_plane_all_zero(self, plane, quad):
        from covcurv.moments import DomainSpec, domain_moments

        mom = domain_moments(plane, DomainSpec.cylindrical(0.1), quad)
        rep = descriptors_from_invariants(mom, sym_eig(mom.C), 0.1, 2, "cylindrical")
        assert rep.scalar_curvature == pytest.approx(0.0, abs=1e-9)
        assert rep.mean_curvature == pytest.approx(0.0, abs=1e-6)
        np.testing.assert_allclose(rep.principal_values, 0.0, atol=1e-9)
        assert rep.orientation_sign == 0  # flat: no orientation signal

    def test_paraboloid_quadrature_path(self, paraboloid, quad):
        from covcurv.moments import DomainSpec, domain_moments

        eps = 0.05
        mom = domain_moments(paraboloid, DomainSpec.cylindrical(eps), quad)
        rep = descriptors_from_invariants(mom, sym_eig(mom.C), eps, 2, "cylindrical")
        np.testing.assert_allclose(np.sort(rep.principal_values), [1.0, 4.0], atol=0.05)
        # scalar estimate carries the documented O(eps^2) truncation bias
        assert rep.scalar_curvature == pytest.approx(4.0, abs=30 * eps**2)

    def test_reference_convention_enforced(self, paraboloid, quad):
        from covcurv.moments import DomainSpec, domain_moments

        mom = domain_moments(paraboloid, DomainSpec.cylindrical(0.1), quad)
        with pytest.raises(ValueError, match="barycenter"):
            descriptors_from_invariants(mom, sym_eig(mom.C), 0.1, 2, "spherical")

    def test_hypersurface_sum_identity(self, sweep_cache):
        # H^2 - R = sum kappa_mu^2 within the claimed order
        rep = sweep_cache("paraboloid", "spherical")
        tail = rep.rows[-1]
        des = descriptors_from_invariants(tail.moments, tail.eig, tail.eps, 2, "spherical")
        lhs = des.mean_curvature**2 - des.scalar_curvature
        assert lhs == pytest.approx(float(np.sum(des.principal_values**2)), rel=0.02)
        assert np.sum(des.principal_values) == pytest.approx(des.mean_curvature, rel=0.01)


class TestOracleEquivalence:
    """Quadrature vs closed forms over the shared sweeps."""

    CASES = [("paraboloid", "cylindrical"), ("paraboloid", "spherical"),
             ("saddle", "cylindrical"), ("saddle", "spherical"),
             ("sphere", "cylindrical"), ("sphere", "spherical"),
             ("plane", "cylindrical")]

    @pytest.mark.parametrize("chart_key,kind", CASES)
    def test_slope_checks(self, sweep_cache, chart_key, kind):
        rep = sweep_cache(chart_key, kind)
        for check in rep.checks:
            assert check.passed, f"{chart_key}/{kind} {check.name}: {check.detail}"

    def test_limit_eigenvector_angles_shrink(self, sweep_cache):
        rep = sweep_cache("paraboloid", "cylindrical")
        angles = []
        for row in rep.rows:
            v_emp = row.eig.eigenvectors[:, 0]
            v_pred = row.prediction.vectors[:, 0]
            angles.append(np.arccos(min(1.0, abs(float(v_emp @ v_pred)))))
        # monotone decreasing over the sweep tail
        tail = angles[-4:]
        assert all(tail[i + 1] <= tail[i] + 1e-12 for i in range(len(tail) - 1))
        assert angles[-1] <= 1e-2


class TestNormalizedInversion:
    @pytest.mark.parametrize("kind", ["cylindrical", "spherical"])
    def test_scalars_recover_curvature(self, kind):
        rng = np.random.default_rng(55)
        for _ in range(25):
            n, k = int(rng.integers(2, 4)), int(rng.integers(1, 4))
            cs = cc.curvature_summary(random_sff(rng, n, k))
            eps = 0.02
            pred = predict_eigenvalues(cs, eps, n, k, kind)
            V = predict_volume(cs, eps, n, kind)
            lam_t, lam_n = pred.tangent / V, pred.normal / V
            T, H_sq, R = normalized_curvature_scalars(lam_t, lam_n, eps, n, kind)
            # the volume normalization itself injects an O(eps^2) relative error
            tol = 10.0 * eps**2 * max(1.0, cs.tr_III)
            assert T == pytest.approx(cs.tr_III, abs=tol)
            assert H_sq == pytest.approx(cs.H_norm_sq, abs=tol)
            assert R == pytest.approx(cs.scalar, abs=2 * tol)

    @pytest.mark.parametrize("kind", ["cylindrical", "spherical"])
    def test_principal_values_recovered(self, kind):
        rng = np.random.default_rng(56)
        for _ in range(25):
            n = int(rng.integers(2, 5))
            sff = random_sff(rng, n, 1)
            cs = cc.curvature_summary(sff)
            if abs(cs.H[0]) < 0.5:
                continue
            eps = 0.02
            pred = predict_eigenvalues(cs, eps, n, 1, kind)
            V = predict_volume(cs, eps, n, kind)
            T, H_sq, _ = normalized_curvature_scalars(pred.tangent / V, pred.normal / V,
                                                      eps, n, kind)
            H_signed = math.copysign(math.sqrt(max(H_sq, 0.0)), cs.H[0])
            got = normalized_principal_values(pred.tangent / V, T, H_sq, H_signed,
                                              eps, n, kind)
            kappa = np.sort(np.linalg.eigvalsh(sff.kappa[0]))
            tol = 30.0 * eps**2 * max(1.0, float(np.max(np.abs(kappa))) ** 2)
            if kind == "spherical":
                np.testing.assert_allclose(np.sort(got), kappa, atol=tol)
            else:
                np.testing.assert_allclose(np.sort(got), np.sort(kappa**2), atol=tol)
