"""Bi-stochastic kernels from asymmetric affinities to a reference set."""

from ._core import (
    Error,
    FitResult,
    SpectralModel,
    apply_operator,
    bistochastic_residual,
    compute_densities,
    diffusion_coordinates,
    eigendecompose,
    extend_eigenfunctions,
    extend_new_points,
    fit,
    gaussian_affinity,
    gram,
    materialize_kernel,
    median_bandwidth,
    normalize_affinity,
    restrict_eigenfunctions,
    select_reference,
    sinkhorn_balance,
    stochastic_residual,
    uniform_measure,
    validate_assumptions,
)

__all__ = [name for name in dir() if not name.startswith("_")]
