"""Probability that the drifted SABR state process hits zero.

The package computes the absorbed mass 𝐏 = ∫₀^∞ dt ∫₀^t f(s, t) ds of the
wedge first-passage density via a scaled-Bessel series and nested
double-exponential quadrature, cross-validated by direct Monte Carlo of the
underlying correlated Brownian race, and ships the isometry/heat-kernel
toolkit of the associated geometry.
"""
from .density import (
    DEFAULT_CONFIG,
    DensityEvalConfig,
    f_joint,
    f_uncorrelated,
    series_diagnostics,
)
from .errors import (
    BetaOneError,
    DomainError,
    QuadratureError,
    SabrBoundaryError,
    SeriesTruncationError,
)
from .geometry import (
    ChartPoint,
    MapId,
    SpaceId,
    diagram_residual,
    map_apply,
    map_jacobian,
    map_source,
    map_target,
    metric_tensor,
    pullback_residual,
)
from .kernels import (
    KernelValue,
    heat_kernel_h,
    hyperbolic_distance,
    kernel_g,
    kernel_g0,
    kernel_u,
    laplace_beltrami_apply,
)
from .montecarlo import (
    McConfig,
    McEstimate,
    McHistogram,
    default_horizon,
    estimate_first_passage,
    first_passage_histogram,
    simulate_sabr,
    worker_count,
)
from .params import (
    ModelParams,
    WedgeCoordinates,
    derive_wedge,
    require_valid,
    validate,
)
from .quadrature import (
    QuadratureResult,
    SweepEntry,
    cumulative,
    hitting_probability,
    hitting_probability_wedge,
    sweep,
)
from .special import bessel_i_scaled, ive_grid, log_gamma

__all__ = [
    "BetaOneError",
    "ChartPoint",
    "DEFAULT_CONFIG",
    "DensityEvalConfig",
    "DomainError",
    "KernelValue",
    "MapId",
    "McConfig",
    "McEstimate",
    "McHistogram",
    "ModelParams",
    "QuadratureError",
    "QuadratureResult",
    "SabrBoundaryError",
    "SeriesTruncationError",
    "SpaceId",
    "SweepEntry",
    "WedgeCoordinates",
    "bessel_i_scaled",
    "cumulative",
    "default_horizon",
    "derive_wedge",
    "diagram_residual",
    "estimate_first_passage",
    "f_joint",
    "f_uncorrelated",
    "first_passage_histogram",
    "heat_kernel_h",
    "hitting_probability",
    "hitting_probability_wedge",
    "hyperbolic_distance",
    "ive_grid",
    "kernel_g",
    "kernel_g0",
    "kernel_u",
    "laplace_beltrami_apply",
    "log_gamma",
    "map_apply",
    "map_jacobian",
    "map_source",
    "map_target",
    "metric_tensor",
    "pullback_residual",
    "require_valid",
    "series_diagnostics",
    "simulate_sabr",
    "sweep",
    "validate",
    "worker_count",
]
