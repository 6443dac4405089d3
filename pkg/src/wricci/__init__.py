"""Weighted Ricci curvature, weighted Laplacians and spectral gaps on
weighted Riemannian manifolds, including negative effective dimension."""

__version__ = "0.1.0"

from .expr import DomainError, Expression, ExpressionError, ParseError, parse
from .geometry import (
    Chart,
    GeometryError,
    ScalarField,
    christoffel,
    gradient,
    hessian,
    laplace_beltrami,
    ricci_tensor,
)
from .weighted import (
    NEG_INF,
    WeightedManifold,
    curvature_report,
    custom_line,
    model_space,
    ric_n_direction,
    ric_n_form,
    ric_n_min,
    sigma_curvature_check,
    warped_product,
    weighted_laplacian,
)
from .spectral import (
    SpectralError,
    discretize,
    eigen_smallest,
    first_nonzero_eigenvalue,
    l2_membership_diagnostic,
    truncation_trajectory,
)
from .analysis import (
    bochner_report,
    bw_residual,
    concentration_profile,
    lsi_deficit,
    lsi_sweep,
    sigma_composed_bound,
    spectral_gap_bound,
    tilt_grid,
)
