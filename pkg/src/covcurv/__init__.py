"""covcurv: local PCA integral invariants and curvature of embedded manifolds.

Three routes to the same geometry, built to check each other:

* closed-form asymptotic predictions of volume, barycenter and covariance
  spectra of small cylindrical and spherical neighborhoods (`predictions`),
  driven by the curvature tensors of a graph chart (`curvature`);
* an independent quadrature oracle with no series truncation (`moments`);
* statistical estimators on finite point samples (`pointcloud`).
"""

__version__ = "0.1.0"

from .charts import (
    ManifoldChart,
    chart_from_id,
    expr_chart,
    paraboloid_chart,
    plane_chart,
    quadratic_chart,
    saddle_codim2_chart,
    sphere_chart,
)
from .curvature import (
    CurvatureSummary,
    SecondFundamentalForm,
    curvature_summary,
    mean_curvature,
    ricci_asymmetry,
    second_fundamental_form,
    third_form_operator,
)
from .moments import (
    BoundaryRadius,
    DomainSpec,
    MomentSet,
    QuadratureConfig,
    boundary_radius,
    domain_moments,
    generic_cylinder_ellipsoid,
)
from .pointcloud import (
    CloudDescriptors,
    PointSample,
    estimate_descriptors,
    estimate_moments,
    load_xyz,
    sample_domain,
    save_xyz,
)
from .predictions import (
    DescriptorReport,
    SpectrumPrediction,
    curve_curvature_average,
    descriptors_from_invariants,
    empirical_ratios,
    predict_barycenter,
    predict_eigenvalues,
    predict_generic_cyl_eigs,
    predict_ratio_limits,
    predict_volume,
)
from .spectra import (
    EigenDecomposition,
    ExpansionFit,
    PerturbationPrediction,
    assemble_block_matrix,
    fit_expansion,
    loglog_slope,
    perturbation_predict,
    sym_eig,
)
from .sphere_integrals import (
    MultiIndex,
    ball_volume,
    index_pattern_integral,
    monomial_ball_integral,
    monomial_sphere_integral,
    monte_carlo_sphere_integral,
    sphere_area,
)
from .sweeps import run_descriptor_sweep, run_sweep
