"""Density-weighted quadrature rules for population form matrices.

Every rule integrates against the model's stationary distribution:
``integral f dQ ~ sum_i w_i f(x_i)``.  Gauss-Hermite handles Gaussian
densities exactly on polynomial integrands, generalized Gauss-Laguerre does
the same for Gamma densities, and tensor Gauss-Legendre (weights absorbing
the density) or seeded Monte Carlo covers everything else.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, roots_genlaguerre

__all__ = ["Quadrature", "gauss_hermite", "gauss_gamma", "tensor_legendre",
           "monte_carlo", "for_model"]


@dataclass(frozen=True)
class Quadrature:
    nodes: np.ndarray      # (N, n)
    weights: np.ndarray    # (N,), nonnegative, summing to ~1
    spec: dict

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")

    def integrate(self, values):
        return float(self.weights @ np.asarray(values, dtype=float))


def gauss_hermite(level, mean=None, cov=None, dimension=1):
    """Tensor Gauss-Hermite rule for a Normal(mean, cov) distribution.

    Exact for polynomial integrands of degree up to ``2 * level - 1`` per
    coordinate.
    """
    u, w = np.polynomial.hermite_e.hermegauss(level)
    w = w / math.sqrt(2.0 * math.pi)
    n = dimension
    mean = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
    cov = np.eye(n) if cov is None else np.atleast_2d(np.asarray(cov, dtype=float))
    chol = np.linalg.cholesky(cov)
    grids = list(itertools.product(range(level), repeat=n))
    nodes = np.array([[u[k] for k in idx] for idx in grids])
    weights = np.array([np.prod([w[k] for k in idx]) for idx in grids])
    nodes = nodes @ chol.T + mean
    return Quadrature(nodes, weights, {"kind": "gauss_hermite", "level": level})


def gauss_gamma(level, shape, rate):
    """Generalized Gauss-Laguerre rule for a Gamma(shape, rate) distribution."""
    y, w = roots_genlaguerre(level, shape - 1.0)
    nodes = (y / rate)[:, None]
    weights = w / math.exp(gammaln(shape))
    return Quadrature(nodes, weights,
                      {"kind": "gauss_laguerre", "level": level,
                       "shape": float(shape), "rate": float(rate)})


def tensor_legendre(level, bounds, density):
    """Tensor Gauss-Legendre rule on a box, weights absorbing the density.

    ``bounds`` is an (n, 2) array of box limits.  Suitable for densities with
    effectively compact support inside the box; coverage is the caller's
    responsibility.
    """
    bounds = np.atleast_2d(np.asarray(bounds, dtype=float))
    n = bounds.shape[0]
    u, w = np.polynomial.legendre.leggauss(level)
    axes = []
    for lo, hi in bounds:
        axes.append((0.5 * (hi - lo) * u + 0.5 * (hi + lo),
                     0.5 * (hi - lo) * w))
    grids = list(itertools.product(range(level), repeat=n))
    nodes = np.array([[axes[d][0][k] for d, k in enumerate(idx)] for idx in grids])
    weights = np.array([np.prod([axes[d][1][k] for d, k in enumerate(idx)])
                        for idx in grids])
    qvals = np.array([math.exp(density.log_q(x)) for x in nodes])
    keep = qvals * weights > 0
    return Quadrature(nodes[keep], (weights * qvals)[keep],
                      {"kind": "tensor_legendre", "level": level,
                       "bounds": bounds.tolist()})


def monte_carlo(size, model, seed=0):
    """Seeded Monte Carlo rule drawing nodes from the stationary law."""
    if model.stationary_draw is None:
        raise ValueError("model has no stationary sampler for Monte Carlo nodes")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    nodes = model.stationary_draw(rng, size)
    weights = np.full(size, 1.0 / size)
    return Quadrature(nodes, weights,
                      {"kind": "monte_carlo", "size": size, "seed": seed})


def for_model(model, level=40):
    """Pick the natural rule for a fixture family."""
    density = model.density
    meta = getattr(density, "meta", {})
    if density.family == "gaussian":
        return gauss_hermite(level, meta.get("mean"), meta.get("cov"),
                             model.state_space.dimension)
    if density.family == "gamma":
        return gauss_gamma(level, meta["shape"], meta["rate"])
    if density.family == "student_t":
        nu = meta.get("nu", 3.0)
        half_width = 40.0 * math.sqrt(nu)
        return tensor_legendre(max(level, 120), [[-half_width, half_width]], density)
    raise ValueError(
        f"no default quadrature for family {density.family!r}; build one explicitly")
