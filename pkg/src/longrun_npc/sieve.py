"""Finite-dimensional approximating spaces: basis families with gradients.

Each basis stacks ``m`` functions ``B_k`` (the first one constant) and
evaluates values and gradients at single points or batches.  Families:

- ``hermite_tensor``: tensor products of probabilists' Hermite polynomials
  after a per-coordinate affine standardization; optionally normalized to be
  orthonormal under the standard normal (the default, which conditions the
  second-moment matrix well).
- ``gaussian_rbf``: a constant plus Gaussian bumps at given centers.
- ``bspline_tensor``: tensor products of B-splines on a clamped knot grid,
  plus a constant.
- ``laguerre``: generalized Laguerre polynomials ``L_k^(alpha)(rate * x)`` on
  the positive half-line, optionally orthonormal under the matching Gamma
  density.
"""

import itertools
import math

import numpy as np
from scipy.interpolate import BSpline
from scipy.special import gammaln

__all__ = ["SieveBasis", "make_hermite", "make_rbf", "make_bspline",
           "make_laguerre", "basis_from_spec", "hermite_scaling_from_sample"]


class SieveBasis:
    """A sieve basis: ``m`` functions with value and gradient evaluation.

    Subclass contract: implement ``_eval_batch`` (N, m) and
    ``_grad_batch`` (N, m, n); the constant must be component 0.
    """

    family = None

    def __init__(self, dimension, size, params):
        if size < 2:
            raise ValueError("basis size must be at least 2")
        self.dimension = dimension
        self.m = size
        self.params = params
        self.includes_constant = True

    def eval(self, x):
        """Values ``(B_1(x), ..., B_m(x))``; batched input gives (N, m)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.ndim == 1:
            return self._eval_batch(x.reshape(1, -1))[0]
        return self._eval_batch(x)

    def eval_grad(self, x):
        """Gradients, row ``k`` is ``grad B_k(x)``; batched gives (N, m, n)."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 0:
            x = x.reshape(1)
        if x.ndim == 1:
            return self._grad_batch(x.reshape(1, -1))[0]
        return self._grad_batch(x)

    def to_spec(self):
        return {"family": self.family, "params": self.params}

    def __repr__(self):
        return f"{type(self).__name__}(m={self.m}, n={self.dimension})"


def _sorted_tensor_indices(n, max_degree):
    idx = list(itertools.product(range(max_degree + 1), repeat=n))
    idx.sort(key=lambda t: (sum(t), t))
    return idx


class HermiteBasis(SieveBasis):
    family = "hermite_tensor"

    def __init__(self, dimension, max_degree, shift=None, scale=None, normalize=True):
        if max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        self.max_degree = max_degree
        self.shift = np.zeros(dimension) if shift is None else np.asarray(shift, float)
        self.scale = np.ones(dimension) if scale is None else np.asarray(scale, float)
        if np.any(self.scale <= 0):
            raise ValueError("scale entries must be positive")
        self.normalize = bool(normalize)
        self.indices = _sorted_tensor_indices(dimension, max_degree)
        if self.normalize:
            self._norms = np.array(
                [math.exp(-0.5 * sum(gammaln(k + 1) for k in idx))
                 for idx in self.indices])
        else:
            self._norms = np.ones(len(self.indices))
        params = {
            "dimension": dimension,
            "max_degree": max_degree,
            "shift": self.shift.tolist(),
            "scale": self.scale.tolist(),
            "normalize": self.normalize,
        }
        super().__init__(dimension, len(self.indices), params)

    def _tables(self, u):
        # He_k values and derivatives per coordinate, shape (n, N, d + 1)
        n, d = self.dimension, self.max_degree
        N = u.shape[0]
        vals = np.empty((n, N, d + 1))
        ders = np.empty((n, N, d + 1))
        vals[:, :, 0] = 1.0
        ders[:, :, 0] = 0.0
        if d >= 1:
            vals[:, :, 1] = u.T
            ders[:, :, 1] = 1.0
        for k in range(2, d + 1):
            vals[:, :, k] = u.T * vals[:, :, k - 1] - (k - 1) * vals[:, :, k - 2]
        for k in range(2, d + 1):
            ders[:, :, k] = k * vals[:, :, k - 1]
        return vals, ders

    def _eval_batch(self, x):
        u = (x - self.shift) / self.scale
        vals, _ = self._tables(u)
        out = np.empty((x.shape[0], self.m))
        for col, idx in enumerate(self.indices):
            acc = np.ones(x.shape[0])
            for d, k in enumerate(idx):
                acc = acc * vals[d, :, k]
            out[:, col] = acc * self._norms[col]
        return out

    def _grad_batch(self, x):
        u = (x - self.shift) / self.scale
        vals, ders = self._tables(u)
        out = np.empty((x.shape[0], self.m, self.dimension))
        for col, idx in enumerate(self.indices):
            for j in range(self.dimension):
                acc = np.ones(x.shape[0])
                for d, k in enumerate(idx):
                    acc = acc * (ders[d, :, k] if d == j else vals[d, :, k])
                out[:, col, j] = acc * self._norms[col] / self.scale[j]
        return out


class RbfBasis(SieveBasis):
    family = "gaussian_rbf"

    def __init__(self, centers, widths=None):
        centers = np.atleast_2d(np.asarray(centers, dtype=float))
        n = centers.shape[1]
        if widths is None:
            widths = _median_pairwise(centers)
        widths = np.broadcast_to(np.asarray(widths, dtype=float),
                                 (centers.shape[0],)).copy()
        if np.any(widths <= 0):
            raise ValueError("widths must be positive")
        self.centers = centers
        self.widths = widths
        params = {"centers": centers.tolist(), "widths": widths.tolist()}
        super().__init__(n, centers.shape[0] + 1, params)

    def _eval_batch(self, x):
        out = np.empty((x.shape[0], self.m))
        out[:, 0] = 1.0
        d2 = ((x[:, None, :] - self.centers[None, :, :]) ** 2).sum(axis=2)
        out[:, 1:] = np.exp(-0.5 * d2 / self.widths**2)
        return out

    def _grad_batch(self, x):
        out = np.zeros((x.shape[0], self.m, self.dimension))
        diff = x[:, None, :] - self.centers[None, :, :]
        vals = np.exp(-0.5 * (diff**2).sum(axis=2) / self.widths**2)
        out[:, 1:, :] = -vals[:, :, None] * diff / (self.widths**2)[None, :, None]
        return out


def _median_pairwise(centers):
    if centers.shape[0] < 2:
        return 1.0
    d = np.sqrt(((centers[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2))
    return float(np.median(d[np.triu_indices_from(d, k=1)]))


class BSplineBasis(SieveBasis):
    family = "bspline_tensor"

    def __init__(self, knots, order=4, dimension=1):
        knots = np.asarray(knots, dtype=float)
        if knots.ndim != 1 or knots.size < 2 or np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be a strictly increasing 1-D sequence")
        if order < 2:
            raise ValueError("order must be at least 2")
        self.knots = knots
        self.order = int(order)
        self.degree = self.order - 1
        self.t = np.concatenate([np.full(self.degree, knots[0]), knots,
                                 np.full(self.degree, knots[-1])])
        self.per_dim = len(self.t) - self.order  # interior knots + order
        self.indices = list(itertools.product(range(self.per_dim), repeat=dimension))
        params = {"dimension": dimension, "knots": knots.tolist(), "order": self.order}
        super().__init__(dimension, len(self.indices) + 1, params)

    def _design(self, u):
        return BSpline.design_matrix(u, self.t, self.degree,
                                     extrapolate=True).toarray()

    def _design_deriv(self, u):
        p = self.degree
        lower = BSpline.design_matrix(u, self.t, p - 1, extrapolate=True).toarray()
        K = self.per_dim
        out = np.zeros((u.size, K))
        for k in range(K):
            d1 = self.t[k + p] - self.t[k]
            d2 = self.t[k + p + 1] - self.t[k + 1]
            if d1 > 0:
                out[:, k] += p * lower[:, k] / d1
            if d2 > 0 and k + 1 < lower.shape[1]:
                out[:, k] -= p * lower[:, k + 1] / d2
        return out

    def _eval_batch(self, x):
        per = [self._design(x[:, d]) for d in range(self.dimension)]
        out = np.empty((x.shape[0], self.m))
        out[:, 0] = 1.0
        for col, idx in enumerate(self.indices, start=1):
            acc = np.ones(x.shape[0])
            for d, k in enumerate(idx):
                acc = acc * per[d][:, k]
            out[:, col] = acc
        return out

    def _grad_batch(self, x):
        per = [self._design(x[:, d]) for d in range(self.dimension)]
        der = [self._design_deriv(x[:, d]) for d in range(self.dimension)]
        out = np.zeros((x.shape[0], self.m, self.dimension))
        for col, idx in enumerate(self.indices, start=1):
            for j in range(self.dimension):
                acc = np.ones(x.shape[0])
                for d, k in enumerate(idx):
                    acc = acc * (der[d][:, k] if d == j else per[d][:, k])
                out[:, col, j] = acc
        return out


class LaguerreBasis(SieveBasis):
    """Generalized Laguerre polynomials on the positive half-line (n = 1).

    With ``alpha = shape - 1`` and ``rate`` matching a Gamma(shape, rate)
    density, the normalized variant is orthonormal under that density.
    """

    family = "laguerre"

    def __init__(self, max_degree, alpha=0.0, rate=1.0, normalize=True):
        if max_degree < 1:
            raise ValueError("max_degree must be at least 1")
        if alpha <= -1.0 or rate <= 0:
            raise ValueError("need alpha > -1 and rate > 0")
        self.max_degree = max_degree
        self.alpha = float(alpha)
        self.rate = float(rate)
        self.normalize = bool(normalize)
        if self.normalize:
            self._norms = np.array([
                math.exp(0.5 * (gammaln(k + 1) + gammaln(self.alpha + 1)
                                - gammaln(self.alpha + k + 1)))
                for k in range(max_degree + 1)])
        else:
            self._norms = np.ones(max_degree + 1)
        params = {"max_degree": max_degree, "alpha": self.alpha,
                  "rate": self.rate, "normalize": self.normalize}
        super().__init__(1, max_degree + 1, params)

    def _laguerre_table(self, y):
        # recurrence: (k+1) L_{k+1} = (2k + a + 1 - y) L_k - (k + a) L_{k-1}
        d = self.max_degree
        vals = np.empty((y.size, d + 1))
        vals[:, 0] = 1.0
        if d >= 1:
            vals[:, 1] = 1.0 + self.alpha - y
        for k in range(1, d):
            vals[:, k + 1] = ((2 * k + self.alpha + 1 - y) * vals[:, k]
                              - (k + self.alpha) * vals[:, k - 1]) / (k + 1)
        return vals

    def _eval_batch(self, x):
        y = self.rate * x[:, 0]
        return self._laguerre_table(y) * self._norms

    def _grad_batch(self, x):
        # d/dy L_k^(a)(y) = -L_{k-1}^(a+1)(y)
        y = self.rate * x[:, 0]
        d = self.max_degree
        shifted = LaguerreBasis(max(d, 1), self.alpha + 1.0, 1.0, normalize=False)
        upper = shifted._laguerre_table(y)
        out = np.zeros((x.shape[0], self.m, 1))
        for k in range(1, d + 1):
            out[:, k, 0] = -self.rate * upper[:, k - 1] * self._norms[k]
        return out


def hermite_scaling_from_sample(states):
    """Per-coordinate affine standardization (mean, standard deviation)."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    return states.mean(axis=0), states.std(axis=0, ddof=0)


def make_hermite(dimension, max_degree, shift=None, scale=None, normalize=True):
    """Tensor Hermite basis of per-coordinate degree <= ``max_degree``
    (m = (max_degree + 1)^dimension)."""
    return HermiteBasis(dimension, max_degree, shift, scale, normalize)


def make_rbf(centers, widths=None):
    """Constant plus Gaussian radial bumps (m = len(centers) + 1)."""
    return RbfBasis(centers, widths)


def make_bspline(knots, order=4, dimension=1):
    """Constant plus tensor B-splines on a clamped, strictly increasing knot
    sequence (per-dimension size = interior knot count + order)."""
    return BSplineBasis(knots, order, dimension)


def make_laguerre(max_degree, alpha=0.0, rate=1.0, normalize=True):
    """Generalized Laguerre basis on the positive half-line (m = max_degree + 1)."""
    return LaguerreBasis(max_degree, alpha, rate, normalize)


def basis_from_spec(spec):
    """Instantiate a basis from its ``{"family", "params"}`` dictionary."""
    family, p = spec["family"], dict(spec["params"])
    if family == "hermite_tensor":
        return make_hermite(p["dimension"], p["max_degree"], p.get("shift"),
                            p.get("scale"), p.get("normalize", True))
    if family == "gaussian_rbf":
        return make_rbf(p["centers"], p.get("widths"))
    if family == "bspline_tensor":
        return make_bspline(p["knots"], p.get("order", 4), p.get("dimension", 1))
    if family == "laguerre":
        return make_laguerre(p["max_degree"], p.get("alpha", 0.0),
                             p.get("rate", 1.0), p.get("normalize", True))
    raise ValueError(f"unknown basis family {family!r}")
