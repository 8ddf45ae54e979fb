"""Nonlinear principal components of multivariate stationary diffusions.

Extracts the eigenfunctions of the gradient smoothness form associated with a
density/diffusion-matrix pair from discretely sampled data via a sieve
generalized eigenproblem, builds and simulates the reversible diffusion the
pair implies, checks tail criteria for existence of the components, and
validates extracted components against their autoregressive and long-run
variance implications.
"""

from .model import (
    DensityModel,
    DiffusionModel,
    DiffusionSpec,
    DomainError,
    Penalty,
    SmoothFunction,
    StateSpace,
    check_potential_w,
    generator_apply,
    local_variance,
    make_cir,
    make_custom,
    make_ou,
    make_skew_gaussian,
    make_student,
    model_from_spec,
    model_to_spec,
    potential,
    reverse_time_drift,
    reversible_drift,
    scalar_check_potential,
)

__version__ = "0.1.0"
