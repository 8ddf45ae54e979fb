"""Discretely sampled paths of a diffusion model and Monte Carlo conditionals.

Integration is Euler-Maruyama.  Shocks come from per-stream NumPy generators
derived from a single user seed:

- stream ``(0,)``: the stationary initial draw of :func:`sample_stationary`;
- stream ``(1,)``: the shocks of a single simulated path;
- stream ``(2, i)``: the shocks of path ``i`` in :func:`conditional_mc`.

The streams are spawn keys of ``numpy.random.SeedSequence(seed)``, so path
``i`` is reproducible in isolation regardless of scheduling, and a fixed seed
gives bit-identical output on reruns of the same backend.

Boundary policy: on orthant or box domains the state is clamped to an inset
interior before drift/diffusion evaluation and after every step (full
truncation); on the whole space no clamping occurs.
"""

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import BOUNDARY_INSET

__all__ = ["SamplePath", "NumericsError", "integrate", "sample_stationary",
           "conditional_mc", "write_samples", "read_samples"]

_CHUNK_STEPS = 1 << 20


class NumericsError(RuntimeError):
    """A simulated state became non-finite."""


@dataclass
class SamplePath:
    """A discretely recorded path: ``states[i]`` is the state at time
    ``i * interval`` (after burn-in removal)."""

    states: np.ndarray
    interval: float
    burn_in: int = 0
    substeps: int = 1
    seed: int = 0
    boundary_policy: str = "none"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        if self.states.shape[0] < 1:
            raise ValueError("a path needs at least one state")
        if self.interval <= 0:
            raise ValueError("sampling interval must be positive")

    @property
    def length(self):
        return self.states.shape[0]

    @property
    def dimension(self):
        return self.states.shape[1]

    def times(self):
        return np.arange(self.length) * self.interval


def _stream(seed, key):
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


def _plan(model):
    hints = getattr(model, "sim_hints", None)
    if hints is not None:
        return hints
    space = model.state_space
    clamp = (lambda x: x) if space.kind == "rn" else space.clamp
    return {"kind": "generic", "drift": model.drift,
            "factor": model.diffusion.factor, "clamp": clamp}


def _step_block(plan, x, dt, shocks, stride):
    if plan["kind"] == "affine":
        return kernels.em_affine(x, plan["amat"], plan["bvec"], plan["chol"],
                                 dt, shocks, stride)
    if plan["kind"] == "cir":
        return kernels.em_cir(x, plan["kappa"], plan["theta"], plan["sigma"],
                              BOUNDARY_INSET, dt, shocks, stride)
    return kernels.em_generic(x, plan["drift"], plan["factor"], plan["clamp"],
                              dt, shocks, stride)


def _run_path(model, x0, dt, steps, stride, rng):
    """Drive the stepping kernel in bounded-memory blocks; returns (T, n)."""
    plan = _plan(model)
    n = model.state_space.dimension
    x = np.array(x0, dtype=float).reshape(n)
    recorded = []
    done = 0
    block = max(stride, _CHUNK_STEPS - _CHUNK_STEPS % stride)
    while done < steps:
        take = min(block, steps - done)
        shocks = rng.standard_normal((take, n))
        states, bad = _step_block(plan, x, dt, shocks, stride)
        if bad >= 0:
            raise NumericsError(f"non-finite state at step {done + bad}")
        if states.shape[0]:
            recorded.append(states)
            x = states[-1].copy()
        done += take
    if not recorded:
        return np.empty((0, n))
    return np.concatenate(recorded, axis=0)


def integrate(model, x0, dt, steps, seed=0, record_every=1):
    """Euler-Maruyama path from ``x0``: ``x_{k+1} = x_k + mu(x_k) dt +
    Lambda(x_k) sqrt(dt) z_k``.

    Records the initial state and then every ``record_every``-th step, so the
    result holds ``steps // record_every + 1`` states at spacing
    ``dt * record_every``.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    x0 = np.asarray(x0, dtype=float).reshape(model.state_space.dimension)
    model.state_space.require_interior(x0)
    rng = _stream(seed, (1,))
    body = _run_path(model, x0, dt, steps, record_every, rng)
    states = np.vstack([x0[None, :], body])
    return SamplePath(states, dt * record_every, burn_in=0,
                      substeps=record_every, seed=seed,
                      boundary_policy=_policy(model),
                      meta={"kind": "integrate", "dt": dt, "steps": steps})


def _policy(model):
    return "none" if model.state_space.kind == "rn" else "full_truncation"


def sample_stationary(model, interval, length, burn_in=0, substeps=1, seed=0,
                      x0=None):
    """Path of ``length`` states at spacing ``interval``, recorded every
    ``substeps`` Euler steps (``dt = interval / substeps``), after discarding
    ``burn_in`` recorded points.

    The initial state is drawn from the model's stationary law when one is
    attached; otherwise ``x0`` is required and a generous burn-in is advised.
    """
    if substeps < 1:
        raise ValueError("substeps must be at least 1")
    if length < 1:
        raise ValueError("length must be at least 1")
    if x0 is None:
        if model.stationary_draw is None:
            raise ValueError("model has no stationary sampler; pass x0")
        x0 = model.stationary_draw(_stream(seed, (0,)), 1)[0]
    x0 = model.state_space.clamp(np.asarray(x0, dtype=float))
    dt = interval / substeps
    total = (burn_in + length) * substeps
    rng = _stream(seed, (1,))
    states = _run_path(model, x0, dt, total, substeps, rng)[burn_in:]
    return SamplePath(states, interval, burn_in=burn_in, substeps=substeps,
                      seed=seed, boundary_policy=_policy(model),
                      meta={"kind": "stationary", "model": model.spec})


def conditional_mc(model, phi, x, horizon, npaths=1000, substeps=50, seed=0):
    """Monte Carlo estimate of ``E[phi(x_horizon) | x_0 = x]``.

    Returns ``(mean, standard_error)``.  Path ``i`` consumes the dedicated
    stream ``(2, i)`` of the seed, so the estimate is independent of any
    batching or scheduling of paths.
    """
    if npaths < 2:
        raise ValueError("npaths must be at least 2")
    x = np.asarray(x, dtype=float).reshape(model.state_space.dimension)
    model.state_space.require_interior(x)
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if horizon == 0:
        return float(phi(x)), 0.0
    n = x.size
    steps = max(1, int(substeps))
    dt = horizon / steps
    shocks = np.empty((steps, npaths, n))
    for i in range(npaths):
        shocks[:, i, :] = _stream(seed, (2, i)).standard_normal((steps, n))

    plan = _plan(model)
    finals = _mc_batch(plan, x, dt, shocks)
    if not np.all(np.isfinite(finals)):
        bad = int(np.flatnonzero(~np.isfinite(finals).all(axis=1))[0])
        raise NumericsError(f"non-finite state on path {bad}")
    values = _apply_scalar(phi, finals)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(npaths))
    return mean, se


def _apply_scalar(phi, states):
    """Evaluate a scalar function over rows, batched when phi supports it."""
    try:
        values = np.asarray(phi(states), dtype=float)
        if values.shape == (states.shape[0],):
            return values
    except Exception:
        pass
    return np.array([phi(row) for row in states], dtype=float)


def _mc_batch(plan, x, dt, shocks):
    steps, npaths, n = shocks.shape
    sq = math.sqrt(dt)
    if plan["kind"] == "affine":
        X = np.broadcast_to(x, (npaths, n)).copy()
        a_t = plan["amat"].T
        chol_t = plan["chol"].T
        b = plan["bvec"]
        for k in range(steps):
            X = X + (X @ a_t + b) * dt + (shocks[k] @ chol_t) * sq
        return X
    if plan["kind"] == "cir":
        X = np.full((npaths, 1), x[0])
        kap, th, sig = plan["kappa"], plan["theta"], plan["sigma"]
        for k in range(steps):
            X = X + kap * (th - X) * dt + sig * np.sqrt(X) * sq * shocks[k]
            np.maximum(X, BOUNDARY_INSET, out=X)
        return X
    finals = np.empty((npaths, n))
    for i in range(npaths):
        states, bad = kernels.em_generic(x, plan["drift"], plan["factor"],
                                         plan["clamp"], dt, shocks[:, i, :], steps)
        if bad >= 0:
            raise NumericsError(f"non-finite state on path {i} at step {bad}")
        finals[i] = states[-1]
    return finals


def write_samples(path, csv_file, sidecar_file=None):
    """Write states as CSV (header ``t,x1,...,xn``) plus a JSON sidecar with
    the sampling metadata."""
    with open(csv_file, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{i + 1}" for i in range(path.dimension)])
        for t, row in zip(path.times(), path.states):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in row])
    if sidecar_file is not None:
        meta = {
            "interval": path.interval,
            "burn_in": path.burn_in,
            "substeps": path.substeps,
            "seed": path.seed,
            "boundary_policy": path.boundary_policy,
            "length": path.length,
            "dimension": path.dimension,
        }
        meta.update({k: v for k, v in path.meta.items() if k != "kind"})
        with open(sidecar_file, "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_samples(csv_file, sidecar_file=None):
    """Read a CSV written by :func:`write_samples` back into a SamplePath."""
    with open(csv_file, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError("expected a header row starting with 't'")
        rows = [[float(v) for v in row] for row in reader if row]
    data = np.asarray(rows, dtype=float)
    if data.size == 0:
        raise ValueError("no samples in file")
    times, states = data[:, 0], data[:, 1:]
    meta = {}
    if sidecar_file is not None:
        with open(sidecar_file) as fh:
            meta = json.load(fh)
    if "interval" in meta:
        interval = float(meta["interval"])
    elif len(times) > 1:
        interval = float(times[1] - times[0])
    else:
        interval = 1.0
    return SamplePath(states, interval,
                      burn_in=int(meta.get("burn_in", 0)),
                      substeps=int(meta.get("substeps", 1)),
                      seed=int(meta.get("seed", 0)),
                      boundary_policy=meta.get("boundary_policy", "none"),
                      meta={k: v for k, v in meta.items()
                            if k not in ("interval", "burn_in", "substeps",
                                         "seed", "boundary_policy", "length",
                                         "dimension")})
