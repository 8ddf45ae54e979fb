"""Stationary densities, diffusion matrices, and the reversible model built from them.

A diffusion here is parameterized by a stationary density ``q`` and a
state-dependent positive definite matrix ``Sigma`` rather than by drift and
diffusion coefficients.  The drift that makes the pair ``(q, Sigma)`` the
stationary law of a time-reversible diffusion is

    mu_j(x) = (1/2) [ sum_i d sigma_ij / d y_i  +  (Sigma(x) grad log q(x))_j ],

the product-rule expansion of ``(1/2q) sum_i d(sigma_ij q)/d y_i``.  Working
with ``grad log q`` instead of dividing by ``q`` keeps the formula stable far
into the tails where ``q`` underflows.

The module also evaluates the potential functions obtained from the unitary
transformation ``sqrt(q) = exp(-h)``; their tail behavior feeds the existence
checks in :mod:`longrun_npc.criteria`.

Analytic fixtures (Ornstein-Uhlenbeck, Cox-Ingersoll-Ross, Student-t) double
as oracles for everything downstream: their spectra, moments, and stationary
laws are known in closed form.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _fd
from .expressions import parse_expression

__all__ = [
    "DomainError",
    "StateSpace",
    "DensityModel",
    "DiffusionSpec",
    "DiffusionModel",
    "SmoothFunction",
    "Penalty",
    "reversible_drift",
    "reverse_time_drift",
    "generator_apply",
    "potential",
    "scalar_check_potential",
    "check_potential_w",
    "local_variance",
    "make_ou",
    "make_cir",
    "make_student",
    "make_skew_gaussian",
    "make_custom",
    "model_from_spec",
    "model_to_spec",
]

BOUNDARY_INSET = 1e-12


class DomainError(ValueError):
    """A state fell outside the (interior of the) model's domain."""


@dataclass(frozen=True)
class StateSpace:
    """Open connected domain of the process: all of R^n, the positive orthant,
    or an open axis-aligned box."""

    dimension: int
    kind: str = "rn"
    lower: tuple = None
    upper: tuple = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind not in ("rn", "orthant", "box"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "box":
            lo = np.asarray(self.lower, dtype=float)
            hi = np.asarray(self.upper, dtype=float)
            if lo.shape != (self.dimension,) or hi.shape != (self.dimension,):
                raise ValueError("box bounds must match the dimension")
            if not np.all(lo < hi):
                raise ValueError("box bounds require lower < upper coordinatewise")
            object.__setattr__(self, "lower", tuple(float(v) for v in lo))
            object.__setattr__(self, "upper", tuple(float(v) for v in hi))

    def contains(self, x, inset=BOUNDARY_INSET):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dimension:
            return False
        if not np.all(np.isfinite(x)):
            return False
        if self.kind == "rn":
            return True
        if self.kind == "orthant":
            return bool(np.all(x >= inset))
        lo = np.asarray(self.lower) + inset
        hi = np.asarray(self.upper) - inset
        return bool(np.all(x >= lo) and np.all(x <= hi))

    def require_interior(self, x):
        if not self.contains(x):
            raise DomainError(
                f"state {np.asarray(x, dtype=float).tolist()} outside the "
                f"{self.kind} domain interior"
            )

    def clamp(self, x, inset=BOUNDARY_INSET):
        """Project onto the inset interior (full-truncation boundary policy)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "rn":
            return x
        if self.kind == "orthant":
            return np.maximum(x, inset)
        lo = np.asarray(self.lower) + inset
        hi = np.asarray(self.upper) - inset
        return np.clip(x, lo, hi)

    def to_spec(self):
        out = {"kind": self.kind}
        if self.kind == "box":
            out["lower"] = list(self.lower)
            out["upper"] = list(self.upper)
        return out

    @classmethod
    def from_spec(cls, dimension, spec):
        spec = spec or {"kind": "rn"}
        return cls(
            dimension,
            spec.get("kind", "rn"),
            tuple(spec["lower"]) if "lower" in spec else None,
            tuple(spec["upper"]) if "upper" in spec else None,
        )


class DensityModel:
    """Stationary density ``q`` through its log and log-derivatives.

    Only ``log q`` and its derivatives enter the drift, generator, and
    potential formulas, so custom densities may be specified up to an
    additive constant; fixtures carry exact normalization.

    Parameters
    ----------
    state_space : StateSpace
    log_q : callable
        Scalar ``log q(x)``.
    grad_log_q, hess_log_q : callable, optional
        Analytic derivatives; central finite differences fill in when absent.
    family : str
        One of ``gaussian | gamma | student_t | custom``.
    """

    def __init__(self, state_space, log_q, grad_log_q=None, hess_log_q=None,
                 family="custom"):
        self.state_space = state_space
        self.family = family
        self.meta = {}
        self._log_q = log_q
        self._grad = grad_log_q if grad_log_q is not None else (
            lambda x: _fd.gradient(log_q, x))
        self._hess = hess_log_q if hess_log_q is not None else (
            lambda x: _fd.hessian(log_q, x))

    def log_q(self, x):
        return float(self._log_q(np.asarray(x, dtype=float)))

    def q(self, x):
        return math.exp(self.log_q(x))

    def grad_log_q(self, x):
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def hess_log_q(self, x):
        return np.asarray(self._hess(np.asarray(x, dtype=float)), dtype=float)

    # h = -(1/2) log q, so that sqrt(q) = exp(-h)
    def h(self, x):
        return -0.5 * self.log_q(x)

    def grad_h(self, x):
        return -0.5 * self.grad_log_q(x)

    def hessian_h(self, x):
        return -0.5 * self.hess_log_q(x)


class DiffusionSpec:
    """State-dependent diffusion matrix ``Sigma``, a factor with
    ``Lambda Lambda' = Sigma``, and the divergence terms entering the drift.

    ``div_terms(x)[j] = sum_i d sigma_ij / d y_i``; by default these are
    computed with central finite differences of ``sigma``, with analytic
    overrides supplied by the fixtures.
    """

    def __init__(self, state_space, sigma, factor=None, div_terms=None):
        self.state_space = state_space
        self._sigma = sigma
        self._factor = factor
        self._div = div_terms

    def sigma(self, x):
        s = np.asarray(self._sigma(np.asarray(x, dtype=float)), dtype=float)
        n = self.state_space.dimension
        return s.reshape(n, n)

    def factor(self, x):
        if self._factor is not None:
            n = self.state_space.dimension
            return np.asarray(self._factor(np.asarray(x, dtype=float)),
                              dtype=float).reshape(n, n)
        return np.linalg.cholesky(self.sigma(x))

    def div_terms(self, x):
        if self._div is not None:
            return np.asarray(self._div(np.asarray(x, dtype=float)), dtype=float)
        x = np.asarray(x, dtype=float)
        n = self.state_space.dimension
        h = _fd.fd_step(x)
        out = np.zeros(n)
        for i in range(n):
            e = np.zeros(n)
            e[i] = h[i]
            ds_di = (self.sigma(x + e) - self.sigma(x - e)) / (2.0 * h[i])
            out += ds_di[i, :]
        return out

    @classmethod
    def constant(cls, state_space, matrix):
        matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
        factor = np.linalg.cholesky(matrix)
        n = state_space.dimension
        return cls(
            state_space,
            sigma=lambda x, m=matrix: m,
            factor=lambda x, f=factor: f,
            div_terms=lambda x, n=n: np.zeros(n),
        )


class DiffusionModel:
    """A density/diffusion pair together with a drift.

    When ``drift`` is omitted the unique reversible drift implied by
    ``(q, Sigma)`` is used and the model is flagged reversible.
    """

    def __init__(self, density, diffusion, drift=None, reversible=None,
                 family="custom", spec=None, stationary_draw=None):
        self.density = density
        self.diffusion = diffusion
        self.state_space = density.state_space
        self.family = family
        self.spec = spec
        self.stationary_draw = stationary_draw
        self.sim_hints = None
        if drift is None:
            self._drift = lambda x: reversible_drift(density, diffusion, x)
            self.reversible = True
        else:
            self._drift = drift
            self.reversible = bool(reversible) if reversible is not None else False

    def drift(self, x):
        return np.asarray(self._drift(np.asarray(x, dtype=float)), dtype=float)


class SmoothFunction:
    """Scalar test function with value, gradient, and Hessian.

    Any missing derivative falls back to central finite differences, so a
    plain callable is enough for quick checks while fixtures can supply the
    analytic versions.
    """

    def __init__(self, value, grad=None, hess=None):
        self.value = value
        self._grad = grad
        self._hess = hess

    def __call__(self, x):
        return float(self.value(np.asarray(x, dtype=float)))

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        if self._grad is not None:
            return np.asarray(self._grad(x), dtype=float)
        return _fd.gradient(self.value, x)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        if self._hess is not None:
            return np.asarray(self._hess(x), dtype=float)
        return _fd.hessian(self.value, x)

    @classmethod
    def wrap(cls, phi):
        return phi if isinstance(phi, cls) else cls(phi)


class Penalty:
    """Scalar penalization ``varsigma(x) = exp(v(x))`` used to dominate Sigma.

    ``v`` supplies value, gradient, and Hessian (finite differences fill the
    gaps).  The ``power`` constructor implements the radial family
    ``v = (beta/2) log(1 + |x|^2) + (1/2) log floor`` whose penalization grows
    like ``|x|^beta`` while ``varsigma^2 >= floor`` everywhere.
    """

    def __init__(self, v, v_grad=None, v_hess=None, spec=None):
        self._v = v
        self._v_grad = v_grad if v_grad is not None else (lambda x: _fd.gradient(v, x))
        self._v_hess = v_hess if v_hess is not None else (lambda x: _fd.hessian(v, x))
        self.spec = spec

    def v(self, x):
        return float(self._v(np.asarray(x, dtype=float)))

    def v_grad(self, x):
        return np.asarray(self._v_grad(np.asarray(x, dtype=float)), dtype=float)

    def v_hess(self, x):
        return np.asarray(self._v_hess(np.asarray(x, dtype=float)), dtype=float)

    def sigma(self, x):
        return math.exp(self.v(x))

    def sigma_grad(self, x):
        return self.sigma(x) * self.v_grad(x)

    @classmethod
    def constant(cls, value=1.0):
        if value <= 0:
            raise ValueError("constant penalization must be positive")
        c = math.log(value)
        return cls(
            v=lambda x: c,
            v_grad=lambda x: np.zeros(np.asarray(x).size),
            v_hess=lambda x: np.zeros((np.asarray(x).size,) * 2),
            spec={"kind": "constant", "value": float(value)},
        )

    @classmethod
    def power(cls, beta, floor=1.0):
        if floor <= 0:
            raise ValueError("floor must be positive")
        half_log_floor = 0.5 * math.log(floor)

        def v(x):
            return 0.5 * beta * math.log1p(float(np.dot(x, x))) + half_log_floor

        def v_grad(x):
            x = np.asarray(x, dtype=float)
            return beta * x / (1.0 + np.dot(x, x))

        def v_hess(x):
            x = np.asarray(x, dtype=float)
            r2 = float(np.dot(x, x))
            n = x.size
            return beta * (np.eye(n) / (1.0 + r2)
                           - 2.0 * np.outer(x, x) / (1.0 + r2) ** 2)

        return cls(v, v_grad, v_hess,
                   spec={"kind": "power", "beta": float(beta), "floor": float(floor)})

    @classmethod
    def from_spec(cls, spec):
        kind = spec.get("kind")
        if kind == "constant":
            return cls.constant(spec.get("value", 1.0))
        if kind == "power":
            return cls.power(spec["beta"], spec.get("floor", 1.0))
        raise ValueError(f"unknown penalization kind {kind!r}")

    def as_diffusion(self, state_space):
        """Isotropic diffusion Sigma = varsigma^2 I with analytic divergence."""
        n = state_space.dimension

        def sigma(x):
            return math.exp(2.0 * self.v(x)) * np.eye(n)

        def factor(x):
            return math.exp(self.v(x)) * np.eye(n)

        def div(x):
            # d(varsigma^2)/dx_j = 2 v_j varsigma^2 and sigma_ij is diagonal
            return 2.0 * math.exp(2.0 * self.v(x)) * self.v_grad(x)

        return DiffusionSpec(state_space, sigma, factor, div)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def reversible_drift(density, diffusion, x):
    """Drift of the reversible diffusion with stationary density ``q`` and
    diffusion matrix ``Sigma``.

    Implements ``mu_j = (1/2)[sum_i d sigma_ij/d y_i + (Sigma grad log q)_j]``,
    which never divides by ``q``.
    """
    x = np.asarray(x, dtype=float)
    density.state_space.require_interior(x)
    return 0.5 * (diffusion.div_terms(x)
                  + diffusion.sigma(x) @ density.grad_log_q(x))


def reverse_time_drift(model, x):
    """Drift of the time-reversed process, ``mu* = -mu + 2 mu_rev``.

    For a reversible model this is a fixed point (``mu* = mu``), and for any
    stationarity-preserving drift the average ``(mu + mu*)/2`` equals the
    reversible drift.
    """
    x = np.asarray(x, dtype=float)
    model.state_space.require_interior(x)
    return -model.drift(x) + 2.0 * reversible_drift(model.density, model.diffusion, x)


def generator_apply(model, phi, x):
    """Apply the generator, ``A phi = (1/2) trace(Sigma Hess phi) + mu . grad phi``.

    For a reversible model this equals the negative of the symmetric operator
    associated with the smoothness form.
    """
    x = np.asarray(x, dtype=float)
    model.state_space.require_interior(x)
    phi = SmoothFunction.wrap(phi)
    sig = model.diffusion.sigma(x)
    return float(0.5 * np.trace(sig @ phi.hess(x)) + model.drift(x) @ phi.grad(x))


def potential(density, diffusion, x):
    """Potential from the transformation ``sqrt(q) = exp(-h)``:

    ``V = -sum_ij sigma_ij h_ij - sum_j (sum_i d sigma_ij/d y_i) h_j
    + (grad h)' Sigma (grad h)``.
    """
    x = np.asarray(x, dtype=float)
    density.state_space.require_interior(x)
    gh = density.grad_h(x)
    hh = density.hessian_h(x)
    sig = diffusion.sigma(x)
    return float(-np.sum(sig * hh) - diffusion.div_terms(x) @ gh + gh @ sig @ gh)


def scalar_check_potential(density, varsigma, x):
    """Simplified potential for ``Sigma`` dominated by ``varsigma^2 I``:

    ``V_check = varsigma^2 (-trace Hess h - 2 grad v . grad h + |grad h|^2)``
    with ``varsigma = exp(v)``.
    """
    x = np.asarray(x, dtype=float)
    density.state_space.require_interior(x)
    s = varsigma.sigma(x)
    if not s > 0.0:
        raise ValueError(f"varsigma must be positive, got {s} at {x.tolist()}")
    gh = density.grad_h(x)
    gv = varsigma.v_grad(x)
    tr_hh = float(np.trace(density.hessian_h(x)))
    return float(s * s * (-tr_hh - 2.0 * gv @ gh + gh @ gh))


def check_potential_w(varsigma, lower_bound, x):
    """Companion potential exploiting growth of the penalization gradient:

    ``W_check = (varsigma^2 + c)(grad v . grad v) + (varsigma^2 - c) trace Hess v``
    for ``0 < c <= varsigma(x)^2``.
    """
    x = np.asarray(x, dtype=float)
    if lower_bound <= 0:
        raise ValueError("lower_bound must be positive")
    s2 = varsigma.sigma(x) ** 2
    if s2 < lower_bound:
        raise ValueError(
            f"varsigma^2 = {s2} below lower bound {lower_bound} at {x.tolist()}")
    gv = varsigma.v_grad(x)
    return float((s2 + lower_bound) * (gv @ gv)
                 + (s2 - lower_bound) * np.trace(varsigma.v_hess(x)))


def local_variance(diffusion, grad_phi, x):
    """Local (instantaneous) variance of ``phi(x_t)``: ``(grad phi)' Sigma (grad phi)``."""
    x = np.asarray(x, dtype=float)
    g = np.asarray(grad_phi, dtype=float)
    return float(g @ diffusion.sigma(x) @ g)


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------

def _as_kappa_matrix(kappa, n):
    k = np.asarray(kappa, dtype=float)
    if k.ndim == 0:
        k = float(k) * np.eye(n)
    if k.shape != (n, n):
        raise ValueError("kappa must be a scalar or an (n, n) matrix")
    if not np.allclose(k, k.T, atol=1e-12):
        raise ValueError("kappa matrix must be symmetric")
    if np.any(np.linalg.eigvalsh(k) <= 0):
        raise ValueError("kappa matrix must be positive definite")
    return k


def make_ou(n=1, kappa=1.0, sigma=math.sqrt(2.0)):
    """Ornstein-Uhlenbeck fixture: ``dx = -K x dt + sigma dB``.

    The stationary law is Normal(0, C) with ``C = (sigma^2 / 2) K^{-1}``; the
    smoothness-form eigenvalues are the sums of eigenvalues of ``K`` weighted
    by Hermite multi-indices (``j * kappa`` in one dimension).
    """
    space = StateSpace(n, "rn")
    kmat = _as_kappa_matrix(kappa, n)
    sigma = float(sigma)
    cov = 0.5 * sigma**2 * np.linalg.inv(kmat)
    prec = np.linalg.inv(cov)
    _, logdet = np.linalg.slogdet(cov)
    log_norm = -0.5 * (n * math.log(2.0 * math.pi) + logdet)

    density = DensityModel(
        space,
        log_q=lambda x: log_norm - 0.5 * x @ prec @ x,
        grad_log_q=lambda x: -prec @ x,
        hess_log_q=lambda x: -prec,
        family="gaussian",
    )
    density.meta = {"mean": np.zeros(n), "cov": cov}
    diffusion = DiffusionSpec.constant(space, sigma**2 * np.eye(n))
    chol = np.linalg.cholesky(cov)

    def stationary_draw(rng, size):
        return rng.standard_normal((size, n)) @ chol.T

    spec = {
        "family": "ou",
        "dimension": n,
        "domain": space.to_spec(),
        "params": {
            "kappa": float(kmat[0, 0]) if n == 1 else kmat.tolist(),
            "sigma": sigma,
        },
    }
    model = DiffusionModel(
        density,
        diffusion,
        drift=lambda x: -kmat @ x,
        reversible=True,
        family="ou",
        spec=spec,
        stationary_draw=stationary_draw,
    )
    model.sim_hints = {"kind": "affine", "amat": -kmat, "bvec": np.zeros(n),
                       "chol": sigma * np.eye(n)}
    return model


def make_cir(kappa=1.0, theta=1.0, sigma=1.0):
    """Cox-Ingersoll-Ross fixture: ``dx = kappa (theta - x) dt + sigma sqrt(x) dB``.

    Stationary law Gamma(shape ``2 kappa theta / sigma^2``, rate
    ``2 kappa / sigma^2``); form eigenvalues ``j * kappa`` with generalized
    Laguerre eigenfunctions.
    """
    kappa, theta, sigma = float(kappa), float(theta), float(sigma)
    if min(kappa, theta, sigma) <= 0:
        raise ValueError("kappa, theta, sigma must be positive")
    space = StateSpace(1, "orthant")
    shape = 2.0 * kappa * theta / sigma**2
    rate = 2.0 * kappa / sigma**2
    log_norm = shape * math.log(rate) - gammaln(shape)

    density = DensityModel(
        space,
        log_q=lambda x: log_norm + (shape - 1.0) * math.log(x[0]) - rate * x[0],
        grad_log_q=lambda x: np.array([(shape - 1.0) / x[0] - rate]),
        hess_log_q=lambda x: np.array([[-(shape - 1.0) / x[0] ** 2]]),
        family="gamma",
    )
    density.meta = {"shape": shape, "rate": rate}
    diffusion = DiffusionSpec(
        space,
        sigma=lambda x: np.array([[sigma**2 * x[0]]]),
        factor=lambda x: np.array([[sigma * math.sqrt(x[0])]]),
        div_terms=lambda x: np.array([sigma**2]),
    )

    def stationary_draw(rng, size):
        return rng.gamma(shape, 1.0 / rate, size=(size, 1))

    spec = {
        "family": "cir",
        "dimension": 1,
        "domain": space.to_spec(),
        "params": {"kappa": kappa, "theta": theta, "sigma": sigma},
    }
    model = DiffusionModel(
        density,
        diffusion,
        drift=lambda x: np.array([kappa * (theta - x[0])]),
        reversible=True,
        family="cir",
        spec=spec,
        stationary_draw=stationary_draw,
    )
    model.sim_hints = {"kind": "cir", "kappa": kappa, "theta": theta, "sigma": sigma}
    return model


def make_student(nu=3.0, beta=0.0, floor=1.0):
    """Scalar Student-t fixture with polynomially growing penalization.

    The density has algebraic tails (index ``nu + 1``); the diffusion matrix
    is ``varsigma^2`` with ``varsigma = sqrt(floor) (1 + x^2)^{beta/2}``, the
    radial penalization family.  ``beta = 0`` gives the constant penalization
    ``varsigma^2 = floor``.
    """
    nu = float(nu)
    if nu <= 0:
        raise ValueError("nu must be positive")
    space = StateSpace(1, "rn")
    log_norm = (gammaln((nu + 1.0) / 2.0) - gammaln(nu / 2.0)
                - 0.5 * math.log(nu * math.pi))

    density = DensityModel(
        space,
        log_q=lambda x: log_norm - 0.5 * (nu + 1.0) * math.log1p(x[0] ** 2 / nu),
        grad_log_q=lambda x: np.array([-(nu + 1.0) * x[0] / (nu + x[0] ** 2)]),
        hess_log_q=lambda x: np.array(
            [[-(nu + 1.0) * (nu - x[0] ** 2) / (nu + x[0] ** 2) ** 2]]),
        family="student_t",
    )
    density.meta = {"nu": nu}
    penalty = Penalty.power(beta, floor) if beta != 0.0 else Penalty.constant(floor)
    diffusion = penalty.as_diffusion(space)

    def stationary_draw(rng, size):
        return rng.standard_t(nu, size=(size, 1))

    spec = {
        "family": "student",
        "dimension": 1,
        "domain": space.to_spec(),
        "params": {"nu": nu, "beta": float(beta), "floor": float(floor)},
    }
    model = DiffusionModel(density, diffusion, family="student", spec=spec,
                           stationary_draw=stationary_draw)
    model.penalty = penalty
    return model


def make_skew_gaussian(skew=((0.0, 1.0), (-1.0, 0.0))):
    """Non-reversible 2-D model: standard normal density, Sigma = I, and drift
    ``-x/2 + S x`` for an antisymmetric ``S``.

    Any antisymmetric perturbation preserves stationarity, which makes this
    the canonical example of drift non-identification from ``(q, Sigma)``.
    """
    smat = np.asarray(skew, dtype=float)
    if smat.shape != (2, 2) or not np.allclose(smat, -smat.T, atol=1e-12):
        raise ValueError("skew must be an antisymmetric 2x2 matrix")
    space = StateSpace(2, "rn")
    log_norm = -math.log(2.0 * math.pi)
    density = DensityModel(
        space,
        log_q=lambda x: log_norm - 0.5 * x @ x,
        grad_log_q=lambda x: -x,
        hess_log_q=lambda x: -np.eye(2),
        family="gaussian",
    )
    diffusion = DiffusionSpec.constant(space, np.eye(2))

    def stationary_draw(rng, size):
        return rng.standard_normal((size, 2))

    spec = {
        "family": "custom",
        "dimension": 2,
        "domain": space.to_spec(),
        "expressions": {
            "log_q": f"{log_norm} - (x1^2 + x2^2) / 2",
            "sigma": [["1", "0"], ["0", "1"]],
            "drift": [
                f"-x1/2 + {smat[0, 1]} * x2",
                f"-x2/2 + {smat[1, 0]} * x1",
            ],
        },
    }
    model = DiffusionModel(
        density,
        diffusion,
        drift=lambda x: -0.5 * x + smat @ x,
        reversible=False,
        family="custom",
        spec=spec,
        stationary_draw=stationary_draw,
    )
    model.sim_hints = {"kind": "affine", "amat": -0.5 * np.eye(2) + smat,
                       "bvec": np.zeros(2), "chol": np.eye(2)}
    return model


def make_custom(spec):
    """Build a model from an expression-based specification dictionary.

    Expected fields: ``dimension``, optional ``domain``, and ``expressions``
    with ``log_q`` (string), ``sigma`` (n x n nested list of strings), and an
    optional ``drift`` (list of n strings).  Derivatives of custom densities
    and matrices are taken by finite differences.
    """
    n = int(spec["dimension"])
    space = StateSpace.from_spec(n, spec.get("domain"))
    exprs = spec["expressions"]
    log_q_expr = parse_expression(exprs["log_q"], n)

    density = DensityModel(space, log_q=lambda x: log_q_expr(x), family="custom")

    sigma_exprs = [[parse_expression(e, n) for e in row] for row in exprs["sigma"]]
    if len(sigma_exprs) != n or any(len(row) != n for row in sigma_exprs):
        raise ValueError("sigma expressions must form an n x n matrix")

    def sigma(x):
        m = np.array([[e(x) for e in row] for row in sigma_exprs])
        return 0.5 * (m + m.T)

    diffusion = DiffusionSpec(space, sigma=sigma)

    drift = None
    reversible = True
    if "drift" in exprs and exprs["drift"] is not None:
        drift_exprs = [parse_expression(e, n) for e in exprs["drift"]]
        if len(drift_exprs) != n:
            raise ValueError("drift expressions must have one entry per coordinate")
        drift = lambda x: np.array([e(x) for e in drift_exprs])
        reversible = False

    full_spec = {
        "family": "custom",
        "dimension": n,
        "domain": space.to_spec(),
        "expressions": {
            "log_q": exprs["log_q"],
            "sigma": [list(row) for row in exprs["sigma"]],
        },
    }
    if drift is not None:
        full_spec["expressions"]["drift"] = list(exprs["drift"])
    return DiffusionModel(density, diffusion, drift=drift, reversible=reversible,
                          family="custom", spec=full_spec)


def model_from_spec(spec):
    """Instantiate a model from its JSON-style specification dictionary."""
    family = spec.get("family")
    if family == "ou":
        p = spec.get("params", {})
        kappa = p.get("kappa", 1.0)
        if isinstance(kappa, list):
            kappa = np.asarray(kappa, dtype=float)
        return make_ou(int(spec.get("dimension", 1)), kappa,
                       p.get("sigma", math.sqrt(2.0)))
    if family == "cir":
        p = spec.get("params", {})
        return make_cir(p.get("kappa", 1.0), p.get("theta", 1.0), p.get("sigma", 1.0))
    if family == "student":
        p = spec.get("params", {})
        return make_student(p.get("nu", 3.0), p.get("beta", 0.0), p.get("floor", 1.0))
    if family == "custom":
        return make_custom(spec)
    raise ValueError(f"unknown model family {family!r}")


def model_to_spec(model):
    """Serialize a model back to its specification dictionary."""
    if model.spec is None:
        raise ValueError("model carries no specification (built programmatically)")
    return model.spec
