"""Central finite differences used wherever analytic derivatives are absent.

Step size follows the usual cube-root-of-machine-epsilon rule, scaled per
coordinate so that large states do not lose all relative accuracy.
"""

import numpy as np

_EPS_CBRT = float(np.finfo(float).eps) ** (1.0 / 3.0)


def fd_step(x):
    """Per-coordinate central-difference step, h_i = cbrt(eps) * (1 + |x_i|)."""
    return _EPS_CBRT * (1.0 + np.abs(np.asarray(x, dtype=float)))


def gradient(f, x):
    """Central-difference gradient of a scalar function at the point ``x``."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        g[i] = (f(x + e) - f(x - e)) / (2.0 * h[i])
    return g


def hessian(f, x):
    """Central-difference Hessian of a scalar function at the point ``x``.

    Uses the standard 4-point stencil for mixed partials; the result is
    symmetrized exactly.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    # second derivatives need a larger step for balance (eps**(1/4) rule)
    h = float(np.finfo(float).eps) ** 0.25 * (1.0 + np.abs(x))
    out = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        out[i, i] = (f(x + ei) - 2.0 * f0 + f(x - ei)) / h[i] ** 2
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            out[i, j] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h[i] * h[j])
            out[j, i] = out[i, j]
    return out


def jacobian(f, x, m=None):
    """Central-difference Jacobian of a vector function; row k is d f_k / dx."""
    x = np.asarray(x, dtype=float)
    h = fd_step(x)
    f0 = np.asarray(f(x), dtype=float)
    if m is None:
        m = f0.size
    out = np.empty((m, x.size))
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h[i]
        out[:, i] = (np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2.0 * h[i])
    return out
