import numpy as np
import pytest

import covcurv as cc
from covcurv.charts import chart_from_id
from covcurv.errors import DomainValidityError
from covcurv.sweeps import (
    NOISE_FLOOR,
    descriptor_csv,
    run_descriptor_sweep,
    run_sweep,
    sweep_csv,
)


class TestRunSweep:
    def test_plane_residuals_at_noise(self, plane):
        rep = run_sweep(plane, "cylindrical", np.geomspace(0.3, 0.05, 6))
        assert rep.passed
        for name in ("volume", "tangent", "normal"):
            assert np.all(rep.residuals[name] <= NOISE_FLOOR), name

    def test_schedule_must_decrease(self, plane):
        with pytest.raises(DomainValidityError, match="decreasing"):
            run_sweep(plane, "cylindrical", [0.1, 0.1, 0.1])

    def test_ceiling_enforced(self, unit_sphere):
        with pytest.raises(DomainValidityError, match="ceiling"):
            run_sweep(unit_sphere, "spherical", np.geomspace(0.9, 0.1, 4))

    def test_threads_do_not_change_rows(self, unit_sphere):
        eps = np.geomspace(0.25, 0.08, 5)
        serial = run_sweep(unit_sphere, "spherical", eps)
        pooled = run_sweep(unit_sphere, "spherical", eps, threads=4)
        for a, b in zip(serial.rows, pooled.rows):
            assert a.moments.V == b.moments.V
            np.testing.assert_array_equal(a.moments.C, b.moments.C)

    def test_fits_present(self, sweep_cache):
        rep = sweep_cache("paraboloid", "cylindrical")
        assert "volume_c2" in rep.fits
        assert "tangent_0_c4" in rep.fits and "normal_0_c4" in rep.fits
        # volume eps^2 coefficient = tr III / (2 (n+2)) = 5/8
        assert rep.fits["volume_c2"].coefficient(2) == pytest.approx(5.0 / 8.0, rel=1e-3)


class TestDescriptorSweep:
    def test_quadrature_columns(self, unit_sphere):
        rep = run_descriptor_sweep(unit_sphere, "spherical", np.geomspace(0.3, 0.1, 4))
        kappa = np.stack([r.report.principal_values for r in rep.rows])
        np.testing.assert_allclose(kappa, 1.0, atol=1e-9)
        for row in rep.rows:
            d = row.report.principal_directions
            np.testing.assert_allclose(d.T @ d, np.eye(2), atol=1e-8)

    def test_cloud_columns_deterministic(self, unit_sphere):
        eps = np.geomspace(0.3, 0.15, 3)
        a = run_descriptor_sweep(unit_sphere, "spherical", eps, n_points=5000, seed=2)
        b = run_descriptor_sweep(unit_sphere, "spherical", eps, n_points=5000, seed=2)
        meta = {"config_hash": "z"}
        assert descriptor_csv(a, meta) == descriptor_csv(b, meta)
        assert "pc_kappa_1" in descriptor_csv(a, meta).splitlines()[1 + len(meta)]

    def test_codim2_scalar_columns(self, saddle):
        rep = run_descriptor_sweep(saddle, "cylindrical", np.geomspace(0.3, 0.1, 4))
        scal = np.array([r.scalars for r in rep.rows])
        # columns are (tr III, |H|^2, scalar curvature); exact normalized
        # inversion carries an O(eps^2) volume-normalization bias
        np.testing.assert_allclose(scal[-1], [4.0, 0.0, -4.0], atol=0.15)

    def test_csv_kind_dependent_header(self, unit_sphere):
        eps = np.geomspace(0.3, 0.15, 3)
        rep = run_descriptor_sweep(unit_sphere, "cylindrical", eps)
        header = [l for l in descriptor_csv(rep, {}).splitlines()
                  if not l.startswith("#")][0]
        assert "kappa_sq_1" in header


class TestPlots:
    def test_descriptor_plot_written(self, tmp_path, unit_sphere):
        from covcurv.plots import plot_descriptors, plot_sweep

        srep = run_sweep(unit_sphere, "cylindrical", np.geomspace(0.25, 0.1, 4))
        paths = plot_sweep(srep, str(tmp_path / "s"))
        drep = run_descriptor_sweep(unit_sphere, "spherical", np.geomspace(0.25, 0.1, 4))
        paths += plot_descriptors(drep, str(tmp_path / "d"))
        for p in paths:
            assert (tmp_path / p.split("/")[-1]).stat().st_size > 0


class TestZooIds:
    def test_round_trips(self):
        assert chart_from_id("plane").n == 2
        assert chart_from_id("plane(3,2)").ambient_dim == 5
        par = chart_from_id("paraboloid(1,2)")
        np.testing.assert_allclose(par.hessian_origin()[0], np.diag([1.0, 2.0]))
        sph = chart_from_id("sphere(2,3)")
        assert sph.n == 3
        np.testing.assert_allclose(sph.hessian_origin()[0], np.eye(3) / 2.0)
        quad = chart_from_id("quadratic(2, 1,0,0,-1, 0,1,1,0)")
        assert (quad.n, quad.k) == (2, 2)
        np.testing.assert_allclose(quad.hessian_origin(),
                                   cc.saddle_codim2_chart().hessian_origin())
        expr = chart_from_id("graph-expr(n=2; 0.5*(x1**2 - x2**2); x1*x2)")
        np.testing.assert_allclose(expr.hessian_origin(),
                                   cc.saddle_codim2_chart().hessian_origin(), atol=1e-6)

    def test_bad_ids(self):
        from covcurv.errors import ChartError

        for bad in ("torus(1,2)", "quadratic(2, 1,2,3)", ""):
            with pytest.raises(ChartError):
                chart_from_id(bad)
