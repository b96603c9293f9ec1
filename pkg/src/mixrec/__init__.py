"""Recovery of mixed partial derivatives from point samples.

The package builds sparse-grid sample plans over box-type domains,
reconstructs a function from the sampled values with a multiscale
B-spline quasi-interpolant, evaluates mixed derivatives of the
reconstruction, and estimates recovery errors together with the
matching information-theoretic lower bounds.
"""

from .indexkit import RecoveryParams, derive_rate_params, hyperbolic_cross, smoothness_order
from .domain import MTypeDomain, make_domain
from .bspline import ScaledTranslate, bspline_eval, bspline_deriv, g_eval
from .polylag import LocalPoly, interpolate_cell, nodes_1d
from .multiscale import Reconstruction, build_reconstruction, quasi_interp_R, prolong_H, telescoped_V
from .smoothness import mixed_diff, modulus_avg, modulus_sup, seminorm_estimate
from .recovery import (
    QuadSpec,
    SamplePlan,
    build_sample_plan,
    recover,
    lq_error,
    convergence_sweep,
    fit_rate,
    get_function,
)
from .adversarial import FoolingFunction, choose_level, find_empty_cells, build_fooling

__version__ = "0.1.0"

__all__ = [
    "RecoveryParams",
    "derive_rate_params",
    "hyperbolic_cross",
    "smoothness_order",
    "MTypeDomain",
    "make_domain",
    "ScaledTranslate",
    "bspline_eval",
    "bspline_deriv",
    "g_eval",
    "LocalPoly",
    "interpolate_cell",
    "nodes_1d",
    "Reconstruction",
    "build_reconstruction",
    "quasi_interp_R",
    "prolong_H",
    "telescoped_V",
    "mixed_diff",
    "modulus_avg",
    "modulus_sup",
    "seminorm_estimate",
    "QuadSpec",
    "SamplePlan",
    "build_sample_plan",
    "recover",
    "lq_error",
    "convergence_sweep",
    "fit_rate",
    "get_function",
    "FoolingFunction",
    "choose_level",
    "find_empty_cells",
    "build_fooling",
    "__version__",
]
