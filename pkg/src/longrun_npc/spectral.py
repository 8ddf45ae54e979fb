"""Truncated eigen-expansions: semigroup, resolvent, and long-run variance.

A function is represented by its coefficients ``c_j = <phi, psi_j>`` on the
extracted components (unit second moment each).  On this truncated expansion
the conditional expectation operator over horizon ``t`` scales ``c_j`` by
``exp(-t delta_j)``, the resolvent with parameter ``alpha > 0`` scales by
``1/(alpha + delta_j)``, and the spectral density at frequency zero of the
centered process is ``sum_{j>=1} 2 c_j^2 / delta_j``.

The expansion is exact only when the function lies in the span of the
components; all fixture checks do.
"""

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["SpectralFunction", "project", "transition_apply",
           "resolvent_apply", "longrun_variance", "evaluate"]

_ADMISSIBLE_RTOL = 1e-10


@dataclass
class SpectralFunction:
    """Coefficients of a function on the component basis of an NpcSet."""

    coefficients: np.ndarray
    npcs: object

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        if self.coefficients.shape != (self.npcs.count,):
            raise ValueError("coefficient length must match the component count")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")


def _resolve(sf, npcs):
    if npcs is not None and npcs is not sf.npcs:
        if not np.array_equal(npcs.eigenvalues, sf.npcs.eigenvalues):
            raise ValueError("component set does not match the expansion")
    return sf.npcs


def project(phi, npcs, forms):
    """Expand ``phi`` on the components using the measure stored in ``forms``.

    ``c_j = a_j' w`` with ``w_k`` the (empirical or quadrature) moment
    ``integral B_k phi dQ``; requires forms and components from the same
    provenance.
    """
    if forms.provenance != npcs.provenance:
        raise ValueError("forms provenance does not match the component set")
    w = forms.moment_vector(phi)
    return SpectralFunction(npcs.coefficients @ w, npcs)


def transition_apply(sf, t, npcs=None):
    """Conditional expectation over horizon ``t``: scale ``c_j`` by
    ``exp(-t delta_j)``."""
    if t < 0:
        raise ValueError("horizon must be nonnegative")
    npcs = _resolve(sf, npcs)
    return SpectralFunction(np.exp(-t * npcs.eigenvalues) * sf.coefficients, npcs)


def resolvent_apply(sf, alpha, npcs=None):
    """Resolvent with parameter ``alpha > 0``: scale ``c_j`` by
    ``1/(alpha + delta_j)``."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    npcs = _resolve(sf, npcs)
    return SpectralFunction(sf.coefficients / (alpha + npcs.eigenvalues), npcs)


def longrun_variance(sf, npcs=None):
    """Spectral density at frequency zero of the centered expansion:
    ``g = sum_{j>=1} 2 c_j^2 / delta_j``.

    The constant direction (j = 0) is removed first; any remaining eigenvalue
    at numerical zero puts the function outside the admissible subspace and is
    rejected.
    """
    npcs = _resolve(sf, npcs)
    delta = npcs.eigenvalues[1:]
    coeff = sf.coefficients[1:]
    if delta.size == 0:
        raise ValueError("no nonconstant components in the expansion")
    tol = _ADMISSIBLE_RTOL * float(np.max(npcs.eigenvalues))
    if np.any(delta <= tol):
        raise ValueError(
            "expansion touches components with numerically zero eigenvalue; "
            "long-run variance is undefined on that direction")
    return float(np.sum(2.0 * coeff**2 / delta))


def evaluate(sf, x):
    """Pointwise value of the expansion, ``sum_j c_j psi_j(x)``."""
    combined = sf.coefficients @ sf.npcs.coefficients
    return sf.npcs.basis.eval(x) @ combined
