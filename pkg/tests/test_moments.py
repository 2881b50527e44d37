import math

import numpy as np
import pytest

import covcurv as cc
from covcurv.errors import DomainValidityError, TransversalityError
from covcurv.moments import (
    DomainSpec,
    QuadratureConfig,
    boundary_radius,
    domain_moments,
    generic_cylinder_ellipsoid,
    sphere_directions,
)
from covcurv.spectra import loglog_slope
from covcurv.sphere_integrals import ball_volume, monomial_sphere_integral, sphere_area


def tilted_plane(theta):
    return np.array([[np.cos(theta), 0.0, np.sin(theta)], [0.0, 1.0, 0.0]])


class TestDomainSpec:
    def test_reference_defaults(self):
        assert DomainSpec.cylindrical(0.1).reference == "center"
        assert DomainSpec.spherical(0.1).reference == "barycenter"

    def test_positive_eps(self):
        with pytest.raises(DomainValidityError):
            DomainSpec.spherical(0.0)

    def test_plane_must_be_orthonormal(self):
        bad = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
        with pytest.raises(DomainValidityError, match="orthonormal"):
            DomainSpec.cylindrical(0.1, plane=bad)

    def test_plane_only_for_cylinders(self):
        with pytest.raises(ValueError):
            DomainSpec(kind="spherical", eps=0.1, plane=np.eye(3)[:2])


class TestSphereDirections:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_weights_integrate_constants(self, n):
        quad = QuadratureConfig(angular=32, qmc_samples=4096)
        dirs, w = sphere_directions(n, quad)
        np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
        tol = 1e-2 if n >= 5 else 1e-10  # QMC fallback is stochastic
        assert np.sum(w) == pytest.approx(sphere_area(n), rel=tol)

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_quadratic_moments_exact(self, n):
        quad = QuadratureConfig(angular=24)
        dirs, w = sphere_directions(n, quad)
        for i in range(n):
            got = float(np.sum(w * dirs[:, i] ** 2))
            want = monomial_sphere_integral(n, tuple(2 if j == i else 0 for j in range(n)))
            assert got == pytest.approx(want, rel=1e-10)


class TestBoundaryRadius:
    def test_plane_is_exact(self, plane):
        dirs = np.array([[1.0, 0.0], [0.0, 1.0], [np.sqrt(0.5), np.sqrt(0.5)]])
        br = boundary_radius(plane, 0.25, dirs)
        np.testing.assert_allclose(br.root, 0.25, atol=1e-14)
        np.testing.assert_allclose(br.series, 0.25, atol=1e-14)

    def test_unit_sphere_root_vs_series(self, unit_sphere):
        eps = 0.1
        dirs = np.stack([np.cos(np.linspace(0, 2 * np.pi, 7)),
                         np.sin(np.linspace(0, 2 * np.pi, 7))], axis=1)
        br = boundary_radius(unit_sphere, eps, dirs)
        exact = eps * math.sqrt(1.0 - eps**2 / 4.0)
        np.testing.assert_allclose(br.root, exact, atol=1e-13)
        np.testing.assert_allclose(br.series, eps - eps**3 / 8.0, atol=1e-15)
        assert np.max(np.abs(br.root - br.series)) <= 1e-5

    def test_flat_direction_of_parabolic_cylinder(self):
        chart = cc.paraboloid_chart(1.0, 0.0)
        br = boundary_radius(chart, 0.1, np.array([[0.0, 1.0]]))
        assert br.root[0] == pytest.approx(0.1, abs=1e-12)  # K = 0 along e2
        assert br.series[0] == pytest.approx(0.1, abs=1e-15)

    def test_eps_beyond_ceiling_rejected(self, unit_sphere):
        with pytest.raises(DomainValidityError, match="ceiling"):
            boundary_radius(unit_sphere, 0.9, np.array([[1.0, 0.0]]))


class TestPlaneMoments:
    def test_cylindrical_closed_form(self, plane, quad):
        eps = 0.3
        m = domain_moments(plane, DomainSpec.cylindrical(eps), quad)
        assert m.V == pytest.approx(math.pi * eps**2, rel=1e-13)
        np.testing.assert_allclose(m.s, 0.0, atol=1e-15)
        want = np.diag([math.pi * eps**4 / 4, math.pi * eps**4 / 4, 0.0])
        np.testing.assert_allclose(m.C, want, atol=1e-16)
        assert m.reference == "center"

    def test_spherical_equals_cylindrical_for_plane(self, plane, quad):
        eps = 0.2
        mc = domain_moments(plane, DomainSpec.cylindrical(eps), quad)
        ms = domain_moments(plane, DomainSpec.spherical(eps), quad)
        assert ms.V == pytest.approx(mc.V, rel=1e-13)
        np.testing.assert_allclose(ms.C[:2, :2], mc.C[:2, :2], atol=1e-16)

    def test_exactness_across_scales(self, plane, quad):
        for eps in (0.05, 0.7, 2.0):
            m = domain_moments(plane, DomainSpec.cylindrical(eps), quad)
            assert m.V == pytest.approx(math.pi * eps**2, rel=1e-12)


class TestCurvedMoments:
    def test_sphere_cylindrical_volume(self, unit_sphere, quad):
        eps = 0.1
        m = domain_moments(unit_sphere, DomainSpec.cylindrical(eps), quad)
        pred = math.pi * eps**2 * (1.0 + eps**2 / 4.0)
        assert abs(m.V - pred) <= 5.0 * eps**6  # next term is O(eps^6)

    def test_sphere_spherical_volume_exact_cap(self, unit_sphere, quad):
        # ambient-ball cap of the unit sphere has area exactly pi eps^2
        for eps in (0.1, 0.2, 0.35):
            m = domain_moments(unit_sphere, DomainSpec.spherical(eps), quad)
            assert m.V == pytest.approx(math.pi * eps**2, rel=1e-12)

    def test_sphere_spherical_invariants_exact(self, unit_sphere, quad):
        eps = 0.2
        m = domain_moments(unit_sphere, DomainSpec.spherical(eps), quad)
        assert m.s[2] == pytest.approx(eps**2 / 4.0, rel=1e-12)
        lam = np.sort(np.linalg.eigvalsh(m.C))[::-1]
        Vn = math.pi * eps**2
        np.testing.assert_allclose(lam[:2], Vn * (eps**2 / 4 - eps**4 / 24), rtol=1e-11)
        assert lam[2] == pytest.approx(math.pi * eps**6 / 48.0, rel=1e-10)

    def test_parallel_axis_identity(self, paraboloid, quad):
        eps = 0.2
        about_center = domain_moments(
            paraboloid, DomainSpec(kind="spherical", eps=eps, reference="center"), quad)
        about_bary = domain_moments(paraboloid, DomainSpec.spherical(eps), quad)
        shifted = about_center.with_reference("barycenter")
        np.testing.assert_allclose(shifted.C, about_bary.C, atol=1e-14)
        np.testing.assert_allclose(
            about_bary.with_reference("center").C, about_center.C, atol=1e-14)

    def test_sph_cyl_leading_agreement_slope(self, unit_sphere, quad):
        eps_list = np.geomspace(0.3, 0.05, 8)
        ratio = []
        for eps in eps_list:
            vs = domain_moments(unit_sphere, DomainSpec.spherical(eps), quad).V
            vcyl = domain_moments(unit_sphere, DomainSpec.cylindrical(eps), quad).V
            ratio.append(abs(vs / vcyl - 1.0))
        slope, _ = loglog_slope(eps_list, np.array(ratio), floor=1e-13)
        assert slope == pytest.approx(2.0, abs=0.2)

    def test_quad_error_halving(self, paraboloid):
        quad = QuadratureConfig(radial_nodes=24, angular=48)
        full = domain_moments(paraboloid, DomainSpec.spherical(0.2), quad)
        half = domain_moments(paraboloid, DomainSpec.spherical(0.2), quad.halved(),
                              _estimate_error=False)
        drift = max(abs(full.V - half.V), float(np.max(np.abs(full.C - half.C))))
        assert drift <= full.quad_error

    def test_saddle_cylindrical_volume_exact(self, saddle, quad):
        # sqrt(det g) = 1 + rho^2 exactly for this chart, so V has a closed form
        eps = 0.25
        m = domain_moments(saddle, DomainSpec.cylindrical(eps), quad)
        assert m.V == pytest.approx(math.pi * eps**2 * (1 + eps**2 / 2), rel=1e-12)

    def test_dimension_three_cylindrical(self, quad):
        chart = cc.sphere_chart(1.0, 3)
        eps = 0.15
        small = QuadratureConfig(radial_nodes=32, angular=24)
        m = domain_moments(chart, DomainSpec.cylindrical(eps), small)
        # tr III = 3 for the unit 3-sphere: V = V_3(eps) (1 + 3 eps^2 / 10 + ...)
        pred = ball_volume(3, eps) * (1.0 + 0.3 * eps**2)
        assert abs(m.V - pred) / ball_volume(3, eps) <= 5.0 * eps**4

    def test_dimension_five_qmc_path(self, quad):
        chart = cc.plane_chart(5, 1)
        small = QuadratureConfig(radial_nodes=12, qmc_samples=8192)
        m = domain_moments(chart, DomainSpec.cylindrical(0.3), small)
        assert m.V == pytest.approx(ball_volume(5, 0.3), rel=2e-3)

    def test_eps_above_ceiling_rejected(self, unit_sphere, quad):
        with pytest.raises(DomainValidityError, match="ceiling"):
            domain_moments(unit_sphere, DomainSpec.spherical(0.6), quad)

    def test_psd_and_symmetry(self, saddle, quad):
        m = domain_moments(saddle, DomainSpec.spherical(0.2), quad)
        np.testing.assert_allclose(m.C, m.C.T, atol=1e-18)
        assert np.min(np.linalg.eigvalsh(m.C)) >= -1e-18
        assert m.V > 0


class TestGenericCylinder:
    def test_tangent_plane_gives_unit_axes(self, paraboloid):
        ell, _ = generic_cylinder_ellipsoid(paraboloid, tilted_plane(0.0))
        np.testing.assert_allclose(ell, [1.0, 1.0], atol=1e-14)

    def test_tilted_plane_axes(self, paraboloid):
        ell, axes = generic_cylinder_ellipsoid(paraboloid, tilted_plane(np.pi / 6))
        np.testing.assert_allclose(ell, [2.0 / math.sqrt(3.0), 1.0], rtol=1e-12)
        # long axis along e1 (the tilted direction sees a shortened shadow)
        assert abs(axes[0, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_normal_plane_rejected(self, paraboloid):
        with pytest.raises(TransversalityError, match="direction"):
            generic_cylinder_ellipsoid(paraboloid, tilted_plane(np.pi / 2))

    def test_plane_chart_ellipsoid_moments_exact(self, plane, quad):
        eps = 0.1
        spec = DomainSpec.cylindrical(eps, plane=tilted_plane(np.pi / 6))
        m = domain_moments(plane, spec, quad)
        ell = np.array([2.0 / math.sqrt(3.0), 1.0])
        assert m.V == pytest.approx(math.pi * eps**2 * np.prod(ell), rel=1e-12)
        lam = np.sort(np.linalg.eigvalsh(m.C))[::-1]
        want = np.sort(eps**4 * ell**2 * math.pi * np.prod(ell) / 4.0)[::-1]
        np.testing.assert_allclose(lam[:2], want, rtol=1e-12)

    def test_curved_chart_generic_volume_leading(self, paraboloid, quad):
        eps_list = np.geomspace(0.2, 0.04, 6)
        ell, _ = generic_cylinder_ellipsoid(paraboloid, tilted_plane(np.pi / 6))
        lead = math.pi * np.prod(ell)
        resid = []
        for eps in eps_list:
            spec = DomainSpec.cylindrical(eps, plane=tilted_plane(np.pi / 6))
            m = domain_moments(paraboloid, spec, quad)
            resid.append(abs(m.V / (lead * eps**2) - 1.0))
        slope, _ = loglog_slope(eps_list, np.array(resid), floor=1e-13)
        assert slope >= 1.5  # O(eps^(n+1)) absolute -> O(eps) relative at least

    def test_transversality_gate_in_domain_moments(self, paraboloid, quad):
        spec = DomainSpec.cylindrical(0.1, plane=tilted_plane(np.pi / 2))
        with pytest.raises(TransversalityError):
            domain_moments(paraboloid, spec, quad)
