"""Path simulation for scalar diffusions.

Trajectories are generated on a fine grid of step dt = delta / refine and
subsampled to the observation grid, so estimators see data whose transition
law is much closer to the true diffusion than one Euler step per observation.

Two one-step schemes are provided:

* ``euler``:  x + b dt + sigma sqrt(dt) Z
* ``milstein2``: the scalar weak second-order scheme

      x + (b - s s_x / 2) dt + s sqrt(dt) Z + s s_x dt Z^2 / 2
        + dt^(3/2) (b s_x / 2 + b_x s / 2 + s^2 s_xx / 4) Z
        + dt^2 (b b_x / 2 + b_xx s^2 / 4)

  with Z standard normal, which matches smooth expectations E f(X_T) to
  O(dt^2).

Every path owns an independent substream keyed by (seed, path_id), so results
do not depend on how paths are batched or distributed over workers. A step
that lands outside the model's admissible region is retried with a fresh draw
up to 5 times before DomainError is raised with the offending step index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteError
from .models import (
    ModelSpec,
    ParamVector,
    diffusion_x_at,
    diffusion_xx_at,
    drift_x_at,
    drift_xx_at,
)

__all__ = ["SimConfig", "Trajectory", "step_euler", "step_milstein2", "simulate", "simulate_ensemble"]

_SCHEMES = ("euler", "milstein2")
_MAX_RETRIES = 5


@dataclass(frozen=True)
class SimConfig:
    """Sampling design for one simulated trajectory.

    n observations are returned at spacing delta, generated on a fine grid of
    n * refine steps of size delta / refine and kept every refine-th point.
    """

    n: int
    delta: float
    x0: float
    seed: int
    refine: int = 10
    scheme: str = "milstein2"

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be a positive integer")
        if not (float(self.delta) > 0.0 and np.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")
        if not np.isfinite(self.x0):
            raise ValueError("x0 must be finite")
        if int(self.refine) < 1:
            raise ValueError("refine must be a positive integer")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}")
        if not (0 <= int(self.seed) < 2 ** 64):
            raise ValueError("seed must be a 64-bit non-negative integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "x0", float(self.x0))
        object.__setattr__(self, "refine", int(self.refine))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class Trajectory:
    """Equally spaced observations (t_i, x_i), i = 0..n, with t_i = t_0 + i delta."""

    t: np.ndarray
    x: np.ndarray
    delta: float

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        x = np.asarray(self.x, dtype=float)
        if t.ndim != 1 or x.ndim != 1 or t.size != x.size or t.size < 2:
            raise ValueError("t and x must be 1-d arrays of equal length >= 2")
        if not (float(self.delta) > 0.0 and np.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "delta", float(self.delta))

    @property
    def n(self) -> int:
        """Number of increments."""
        return self.x.size - 1


def _path_rng(seed: int, path_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, path_id)))


def step_euler(model: ModelSpec, theta: ParamVector, x, dt: float, z):
    """One Euler step from x with standard normal draw z."""
    b = model.drift(theta.alpha, x)
    s = model.diffusion(theta.beta, x)
    return x + b * dt + s * (dt ** 0.5) * z


def step_milstein2(model: ModelSpec, theta: ParamVector, x, dt: float, z):
    """One weak second-order step from x with standard normal draw z."""
    a = theta.alpha
    be = theta.beta
    b = model.drift(a, x)
    s = model.diffusion(be, x)
    bx = drift_x_at(model, a, x)
    bxx = drift_xx_at(model, a, x)
    sx = diffusion_x_at(model, be, x)
    sxx = diffusion_xx_at(model, be, x)
    rdt = dt ** 0.5
    return (
        x
        + (b - 0.5 * s * sx) * dt
        + s * rdt * z
        + 0.5 * s * sx * dt * (z * z)
        + dt * rdt * (0.5 * b * sx + 0.5 * bx * s + 0.25 * s * s * sxx) * z
        + dt * dt * (0.5 * b * bx + 0.25 * bxx * s * s)
    )


_STEPPERS = {"euler": step_euler, "milstein2": step_milstein2}


def _admissible_scalar(model: ModelSpec, theta: ParamVector, x) -> bool:
    return model.guard is None or bool(np.all(model.guard(theta, x)))


def simulate(model: ModelSpec, theta, cfg: SimConfig, path_id: int = 0) -> Trajectory:
    """Simulate one trajectory.

    Args:
        model: coefficient functions and domain guard.
        theta: model parameters (flat sequence or ParamVector).
        cfg: sampling design; cfg.seed and path_id key the random substream.
        path_id: index of this path within a multi-path experiment.

    Returns:
        Trajectory with n + 1 points at spacing cfg.delta starting at t = 0.

    Raises:
        DomainError: x0 inadmissible, or a step left the admissible region
            and 5 retries with fresh draws did not recover.
        NonFiniteError: the scheme produced NaN or Inf.
    """
    theta = model.params(theta)
    if not _admissible_scalar(model, theta, cfg.x0):
        raise DomainError(f"({model.name}) x0 is inadmissible", x=cfg.x0, term="x0")
    step = _STEPPERS[cfg.scheme]
    rng = _path_rng(cfg.seed, path_id)
    dt = cfg.delta / cfg.refine
    out = np.empty(cfg.n + 1, dtype=float)
    out[0] = cfg.x0
    x = cfg.x0
    with np.errstate(all="ignore"):
        for i in range(cfg.n * cfg.refine):
            for _ in range(1 + _MAX_RETRIES):
                xn = step(model, theta, x, dt, rng.standard_normal())
                if not np.isfinite(xn):
                    raise NonFiniteError(f"({model.name}) scheme produced a non-finite state at step {i}")
                if _admissible_scalar(model, theta, xn):
                    break
            else:
                raise DomainError(
                    f"({model.name}) path left the admissible region at step {i}",
                    x=float(xn),
                    term="state guard",
                    step_index=i,
                )
            x = float(xn)
            if (i + 1) % cfg.refine == 0:
                out[(i + 1) // cfg.refine] = x
    t = np.arange(cfg.n + 1, dtype=float) * cfg.delta
    return Trajectory(t=t, x=out, delta=cfg.delta)


def simulate_ensemble(model: ModelSpec, theta, cfg: SimConfig, n_paths: int) -> np.ndarray:
    """Simulate n_paths trajectories, vectorized over paths.

    Path k uses the same substream (cfg.seed, k) as simulate(..., path_id=k),
    so the returned matrix equals stacking individual simulate calls row by
    row, independent of n_paths. Paths that leave the admissible region are
    re-run through the scalar routine to apply its retry rule.

    Returns:
        Array of shape (n_paths, n + 1) of observed states.
    """
    theta = model.params(theta)
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    if not _admissible_scalar(model, theta, cfg.x0):
        raise DomainError(f"({model.name}) x0 is inadmissible", x=cfg.x0, term="x0")
    step = _STEPPERS[cfg.scheme]
    nf = cfg.n * cfg.refine
    dt = cfg.delta / cfg.refine

    draws = np.empty((n_paths, nf), dtype=float)
    for k in range(n_paths):
        _path_rng(cfg.seed, k).standard_normal(out=draws[k])
    draws = np.ascontiguousarray(draws.T)

    out = np.empty((n_paths, cfg.n + 1), dtype=float)
    out[:, 0] = cfg.x0
    x = np.full(n_paths, cfg.x0, dtype=float)
    needs_retry = np.zeros(n_paths, dtype=bool)
    with np.errstate(all="ignore"):
        for i in range(nf):
            xn = step(model, theta, x, dt, draws[i])
            ok = np.isfinite(xn)
            if model.guard is not None:
                ok &= np.asarray(model.guard(theta, xn), dtype=bool)
            bad = ~ok
            if bad.any():
                needs_retry |= bad
                xn = np.where(bad, cfg.x0, xn)
            x = xn
            if (i + 1) % cfg.refine == 0:
                out[:, (i + 1) // cfg.refine] = x
    for k in np.nonzero(needs_retry)[0]:
        out[k] = simulate(model, theta, cfg, path_id=int(k)).x
    return out
