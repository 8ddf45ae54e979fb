"""Form-matrix assembly and the generalized symmetric eigenproblem.

The pair of quadratic forms over a sieve basis ``Psi = (B_1, ..., B_m)`` is

    V = (1/2T) sum_i  grad Psi(x_i) Sigma(x_i) grad Psi(x_i)'
    W = (1/T)  sum_i  Psi(x_i) Psi(x_i)'

for a sample ``{x_i}``, or the corresponding density-weighted quadrature
sums for a population.  Components solve ``V a = delta W a``; the problem is
reduced to a standard symmetric one via the Cholesky factor of ``W``:
``W = L L'``, ``L^{-1} V L^{-T} y = delta y``, ``a = L^{-T} y``.  Eigenpairs
are returned ascending; coefficient vectors come out W-orthonormal and the
smallest eigenvalue is zero (the constant function) whenever the basis
contains the constant.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .sieve import basis_from_spec

__all__ = ["FormMatrices", "NpcSet", "ExtractionError", "assemble_sample",
           "assemble_population", "solve_gevp", "evaluate_npc",
           "evaluate_npc_grad", "npcs_to_dict", "npcs_from_dict"]

_RIDGE_LADDER = (0.0, 1e-12, 1e-10, 1e-8)
_COND_LIMIT = 1e12
_CLUSTER_RTOL = 1e-8
_CHUNK = 8192


class ExtractionError(RuntimeError):
    """Assembly or eigensolution failed (non-finite input, singular W)."""


@dataclass
class FormMatrices:
    """The (V, W) pair over a basis, with the nodes that produced them.

    ``nodes``/``node_weights`` record the empirical or quadrature measure so
    that inner products of new functions against the basis can be formed
    later (spectral projection).
    """

    v: np.ndarray
    w: np.ndarray
    basis: object
    provenance: dict
    ridge: float = 0.0
    nodes: np.ndarray = None
    node_weights: np.ndarray = None

    @property
    def size(self):
        return self.v.shape[0]

    def moment_vector(self, phi):
        """(sum of) ``weights * B_k(x) phi(x)`` over the stored nodes."""
        from .simulate import _apply_scalar
        psi = self.basis.eval(self.nodes)
        values = _apply_scalar(phi, self.nodes)
        return psi.T @ (self.node_weights * values)


@dataclass
class NpcSet:
    """Ordered eigenpairs of (V, W): ``eigenvalues[j]`` with coefficient row
    ``coefficients[j]``, W-orthonormalized, sign-fixed so the coefficient of
    largest magnitude is positive."""

    eigenvalues: np.ndarray
    coefficients: np.ndarray
    basis: object
    provenance: dict
    ridge: float = 0.0
    normalization: str = "w_unit"
    sign_convention: str = "max_abs_coefficient_positive"
    degenerate_clusters: list = field(default_factory=list)

    @property
    def count(self):
        return self.eigenvalues.size


def _ridged(w, override=None):
    """Escalating ridge: tau * trace(W)/m added to the diagonal until W is
    Cholesky-factorizable with a tolerable condition estimate."""
    m = w.shape[0]
    scale = np.trace(w) / m
    ladder = _RIDGE_LADDER if override is None else (override,)
    last_exc = None
    for tau in ladder:
        w_try = w + tau * scale * np.eye(m)
        try:
            np.linalg.cholesky(w_try)
        except np.linalg.LinAlgError as exc:
            last_exc = exc
            continue
        if np.linalg.cond(w_try) <= _COND_LIMIT or tau == ladder[-1]:
            return w_try, tau * scale
    raise ExtractionError(
        f"W not positive definite after maximal ridge "
        f"(cond ~ {np.linalg.cond(w):.3e}): {last_exc}")


def _accumulate(basis, sigma_at, states, weights):
    m = basis.m
    v = np.zeros((m, m))
    w = np.zeros((m, m))
    for start in range(0, states.shape[0], _CHUNK):
        block = states[start:start + _CHUNK]
        wt = weights[start:start + _CHUNK]
        psi = basis.eval(block)
        grad = basis.eval_grad(block)
        sig = np.stack([sigma_at(x) for x in block])
        v += 0.5 * np.einsum("t,tai,tij,tbj->ab", wt, grad, sig, grad,
                             optimize=True)
        w += np.einsum("t,ta,tb->ab", wt, psi, psi, optimize=True)
    return 0.5 * (v + v.T), 0.5 * (w + w.T)


def assemble_sample(basis, diffusion, path, ridge=None):
    """Form matrices under the empirical measure of a sample path.

    Warns when the path is shorter than the basis (W singular in exact
    arithmetic); aborts on non-finite entries.
    """
    states = np.atleast_2d(path.states)
    t_len = states.shape[0]
    if t_len < basis.m:
        warnings.warn(f"sample length {t_len} below basis size {basis.m}; "
                      "W is singular in exact arithmetic", stacklevel=2)
    weights = np.full(t_len, 1.0 / t_len)
    v, w = _accumulate(basis, diffusion.sigma, states, weights)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        raise ExtractionError("non-finite entries in form matrices")
    w_r, used = _ridged(w, ridge)
    provenance = {"kind": "sample", "T": t_len, "interval": path.interval,
                  "short_sample": bool(t_len < basis.m)}
    return FormMatrices(v, w_r, basis, provenance, used, states, weights)


def assemble_population(basis, density, diffusion, quad, ridge=None):
    """Form matrices under a density-weighted quadrature rule."""
    v, w = _accumulate(basis, diffusion.sigma, quad.nodes, quad.weights)
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(w))):
        raise ExtractionError("non-finite entries in form matrices")
    w_r, used = _ridged(w, ridge)
    provenance = {"kind": "population", "quadrature": quad.spec}
    return FormMatrices(v, w_r, basis, provenance, used, quad.nodes,
                        quad.weights.copy())


def solve_gevp(forms, k=None):
    """Solve ``V a = delta W a`` for the ``k`` smallest eigenpairs.

    Nearly equal adjacent eigenvalues are flagged as degenerate clusters; the
    vectors within a cluster are an arbitrary W-orthonormal rotation and any
    comparison should be subspace-based.
    """
    m = forms.size
    k = m if k is None else int(k)
    if not 1 <= k <= m:
        raise ValueError(f"k must be in 1..{m}")
    try:
        lmat = np.linalg.cholesky(forms.w)
    except np.linalg.LinAlgError as exc:
        raise ExtractionError(
            f"Cholesky of W failed (cond ~ {np.linalg.cond(forms.w):.3e})"
        ) from exc
    half = solve_triangular(lmat, forms.v, lower=True)
    mid = solve_triangular(lmat, half.T, lower=True).T
    mid = 0.5 * (mid + mid.T)
    evals, y = np.linalg.eigh(mid)
    avec = solve_triangular(lmat.T, y, lower=False)

    coeff = avec[:, :k].T.copy()
    delta = evals[:k].copy()
    for j in range(k):
        lead = np.argmax(np.abs(coeff[j]))
        if coeff[j, lead] < 0:
            coeff[j] = -coeff[j]

    clusters = []
    current = [0]
    for j in range(1, k):
        if abs(delta[j] - delta[j - 1]) < _CLUSTER_RTOL * (1.0 + abs(delta[j - 1])):
            current.append(j)
        else:
            if len(current) > 1:
                clusters.append(current)
            current = [j]
    if len(current) > 1:
        clusters.append(current)

    return NpcSet(delta, coeff, forms.basis, dict(forms.provenance),
                  ridge=forms.ridge, degenerate_clusters=clusters)


def evaluate_npc(npcs, basis, x, j):
    """Value of component ``j`` at ``x`` (or at a batch of points)."""
    basis = basis if basis is not None else npcs.basis
    if not 0 <= j < npcs.count:
        raise ValueError(f"component index {j} out of range")
    vals = basis.eval(x)
    return vals @ npcs.coefficients[j]


def evaluate_npc_grad(npcs, basis, x, j):
    """Gradient of component ``j`` at ``x`` (or at a batch of points)."""
    basis = basis if basis is not None else npcs.basis
    if not 0 <= j < npcs.count:
        raise ValueError(f"component index {j} out of range")
    grads = basis.eval_grad(x)
    if grads.ndim == 2:
        return npcs.coefficients[j] @ grads
    return np.einsum("a,tan->tn", npcs.coefficients[j], grads)


def npcs_to_dict(npcs):
    return {
        "delta": [float(d) for d in npcs.eigenvalues],
        "coefficients": [[float(c) for c in row] for row in npcs.coefficients],
        "basis": npcs.basis.to_spec(),
        "normalization": npcs.normalization,
        "sign_convention": npcs.sign_convention,
        "ridge": float(npcs.ridge),
        "provenance": npcs.provenance,
        "degenerate_clusters": npcs.degenerate_clusters,
    }


def npcs_from_dict(payload):
    return NpcSet(
        np.asarray(payload["delta"], dtype=float),
        np.asarray(payload["coefficients"], dtype=float),
        basis_from_spec(payload["basis"]),
        payload.get("provenance", {}),
        ridge=float(payload.get("ridge", 0.0)),
        normalization=payload.get("normalization", "w_unit"),
        sign_convention=payload.get("sign_convention",
                                    "max_abs_coefficient_positive"),
        degenerate_clusters=payload.get("degenerate_clusters", []),
    )
