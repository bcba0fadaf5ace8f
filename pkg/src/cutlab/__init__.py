"""Numerical laboratory for cut loci, focal points, and injectivity radii of
points and closed curves on compact surfaces, with stability sweeps."""

__version__ = "0.1.0"

from .geometry import (ChartMetricField, GeometryError, ImplicitSurface,
                       PeriodicChart, ScalarField, ZERO_FIELD,
                       ambient_scalar_field, aux_distance, chart_metric_field,
                       chart_scalar_field, conformal_family, gauss_curvature,
                       level_surface, linear_blend, metric_eval)
from .geodesics import (GeodesicPath, IntegrationError, exp_map,
                        integrate_geodesic, normal_exp, normal_exp_jacobian)
from .submanifold import (CurveSpec, NormalFrame, SubmanifoldSpec, chart_curve,
                          curve_submanifold, direction_circle,
                          embedding_family, foot_point, point_submanifold,
                          principal_curvature_bound, shape_operator,
                          surface_curve, unit_normal)
from .wavefront import (CoverageError, WavefrontAtlas, build_atlas, distance,
                        eikonal_residual, validation_grid)
from .cutanalysis import (CutProfile, PointCloud, compute_profiles, cut_time,
                          cut_locus_cloud, f_min, focal_time,
                          injectivity_radius_char, injectivity_radius_direct,
                          loop_scan, separating_points, tangential_cut_locus,
                          warner_bound)
from .stability import (HausdorffReport, Resolution, ScenarioResult,
                        SweepTable, curvature_stats,
                        cut_time_continuity_probe,
                        focal_free_persistence_probe, hausdorff,
                        hausdorff_convergence_check, hausdorff_report,
                        run_case, sweep_embedding_family, sweep_metric_family)
from .config import ConfigError, RunConfig, parse_config, scenario
