"""Biased tug-of-war game values and exponential minimizing extensions.

A solver and verification toolkit for the value functions of biased
random-turn games on finite graphs and lattice domains: dynamic
programming fixed points, exponential McShane-Whitney extensions and cone
comparisons, one-sided exponential slopes, Monte-Carlo play, and a battery
of property checks connecting them.
"""

__version__ = "0.1.0"

from .bias import BiasParams, make_bias, unbiased
from .extensions import (ComparisonCertificate, ConvexityCertificate,
                         ExpCone, check_beta_concave, check_beta_convex,
                         check_ceca, check_cecb, cone_eval, lambda_extension,
                         psi_extension, sphere_profile)
from .fields import ValueField, as_values
from .game import (EpisodeStats, PullBoundsReport, Strategy,
                   check_pull_bounds, play)
from .presets import (boundary_function, build_preset, cone_1d, cone_values,
                      counterexample_ray, counterexample_ray_field, path_1d,
                      path_closed_form, square_2d, three_node)
from .slopes import (ChainResult, SlopeReport, boundary_slope,
                     chain_step_slopes, exp_slope, increasing_slope_chain,
                     local_slope, realizable_radii, s_minus, s_plus)
from .solver import (RefineStep, SolveConfig, bellman_apply,
                     equation_residual, epsilon_refine, solve)
from .spaces import (BiasedGraph, GridDomain, discrete_boundary, load_space,
                     path_distance)
from .verify import (CheckResult, VerifyConfig, blow_up_probe, corrupt_field,
                     harnack_check, mean_value_order_study,
                     mean_value_residual, mean_value_weight_gap, run_all)

__all__ = [
    "BiasParams", "make_bias", "unbiased",
    "BiasedGraph", "GridDomain", "path_distance", "discrete_boundary",
    "load_space",
    "ValueField", "as_values",
    "SlopeReport", "ChainResult", "exp_slope", "boundary_slope",
    "local_slope", "s_plus", "s_minus", "realizable_radii",
    "increasing_slope_chain", "chain_step_slopes",
    "ExpCone", "ComparisonCertificate", "ConvexityCertificate", "cone_eval",
    "psi_extension", "lambda_extension", "check_ceca", "check_cecb",
    "check_beta_convex", "check_beta_concave", "sphere_profile",
    "SolveConfig", "RefineStep", "bellman_apply", "equation_residual",
    "solve", "epsilon_refine",
    "Strategy", "EpisodeStats", "PullBoundsReport", "play",
    "check_pull_bounds",
    "CheckResult", "VerifyConfig", "mean_value_residual",
    "mean_value_weight_gap", "mean_value_order_study", "harnack_check",
    "blow_up_probe", "run_all", "corrupt_field",
    "counterexample_ray", "counterexample_ray_field", "cone_1d",
    "cone_values", "path_1d", "path_closed_form", "square_2d", "three_node",
    "boundary_function", "build_preset",
    "__version__",
]
