"""Pure NumPy Euler-Maruyama stepping kernels.

These mirror the compiled kernels in ``_native.pyx`` operation for operation;
either backend must produce the same recorded states up to floating-point
reassociation.  Shocks are pre-drawn standard normals of shape (steps, n), so
the kernels themselves are deterministic recursions and the RNG contract
lives entirely with the caller.

Each kernel records the state after every ``record_stride`` steps and returns
``(states, bad_step)`` where ``bad_step`` is the 1-based index of the first
step at which a recorded state was non-finite (-1 when the path is clean).
"""

import numpy as np

BACKEND = "python"


def em_affine(x0, amat, bvec, chol, dt, shocks, record_stride):
    """Stepper for ``dx = (b + A x) dt + L dB`` with constant ``A, b, L``."""
    x = np.array(x0, dtype=float)
    steps = shocks.shape[0]
    nrec = steps // record_stride
    out = np.empty((nrec, x.size))
    sq = np.sqrt(dt)
    bad = -1
    r = 0
    for k in range(steps):
        x = x + (bvec + amat @ x) * dt + (chol @ shocks[k]) * sq
        if (k + 1) % record_stride == 0:
            out[r] = x
            r += 1
            if bad < 0 and not np.all(np.isfinite(x)):
                bad = k + 1
                break
    return out, bad


def em_cir(x0, kappa, theta, sigma, floor, dt, shocks, record_stride):
    """Stepper for ``dx = kappa (theta - x) dt + sigma sqrt(x) dB`` on the
    positive half-line with the full-truncation boundary policy: drift and
    diffusion are evaluated at the state clamped to ``floor``, and the state
    itself is clamped after every step."""
    x = float(np.asarray(x0).reshape(-1)[0])
    steps = shocks.shape[0]
    nrec = steps // record_stride
    out = np.empty((nrec, 1))
    sq = np.sqrt(dt)
    bad = -1
    r = 0
    if x < floor:
        x = floor
    for k in range(steps):
        x = x + kappa * (theta - x) * dt + sigma * np.sqrt(x) * sq * shocks[k, 0]
        if x < floor:
            x = floor
        if (k + 1) % record_stride == 0:
            out[r, 0] = x
            r += 1
            if bad < 0 and not np.isfinite(x):
                bad = k + 1
                break
    return out, bad


def em_generic(x0, drift, factor, clamp, dt, shocks, record_stride):
    """Stepper for arbitrary drift/factor callables with a clamp enforcing the
    boundary policy (identity on the whole space)."""
    x = clamp(np.array(x0, dtype=float))
    steps = shocks.shape[0]
    nrec = steps // record_stride
    out = np.empty((nrec, x.size))
    sq = np.sqrt(dt)
    bad = -1
    r = 0
    for k in range(steps):
        x = x + np.asarray(drift(x), dtype=float) * dt \
            + (np.asarray(factor(x), dtype=float) @ shocks[k]) * sq
        x = clamp(x)
        if (k + 1) % record_stride == 0:
            out[r] = x
            r += 1
            if bad < 0 and not np.all(np.isfinite(x)):
                bad = k + 1
                break
    return out, bad
