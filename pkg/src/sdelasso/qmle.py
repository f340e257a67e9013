"""Quasi maximum likelihood estimation by multistart quasi-Newton descent.

The contrast is smooth but can have shallow valleys (power diffusions couple
scale and exponent), so the minimizer is run from the moment-based default
start plus four seeded perturbations of it; the best converged value wins.
Inadmissible trial points are given a large finite objective so the line
search backs off instead of crashing.

Standard errors come from the inverse of the (PD-repaired) raw Hessian at
the estimate: the rate normalization phi(n) cancels between the asymptotic
covariance phi^(1/2) I^{-1} phi^(1/2) and the Hessian scaling, leaving
sqrt(diag(H^{-1})) in natural parameter units.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .contrast import ContrastEval, evaluate_contrast, quasi_grad, quasi_loglik
from .errors import DomainError, NonFiniteError
from .models import ModelSpec, ParamVector
from .optimize import BIG, minimize_bfgs
from .simulate import Trajectory

__all__ = ["FitOptions", "FitResult", "default_init", "fit"]

_RESTART_SEED = 1729  # fixed so restart perturbations are reproducible


@dataclass(frozen=True)
class FitOptions:
    """Optimizer controls for fit().

    max_step caps the infinity norm of each accepted line-search step; None
    picks 0.25 * (1 + |start|_inf) per start. The cap keeps the iterate in
    the descent basin of its starting point: without it the first iteration
    steps along the raw gradient, whose magnitude on a fresh sample can be
    in the thousands, and a single accepted step can hop a ridge into a
    remote overfitting valley (small fitted diffusion at the sample minimum)
    that the line search alone never rejects.
    """

    grad_tol: float = 1e-6
    step_tol: float = 1e-10
    max_iter: int = 500
    restarts: int = 5
    restart_seed: int = _RESTART_SEED
    max_step: float | None = None


@dataclass(frozen=True)
class FitResult:
    """Unpenalized estimate theta_tilde and the contrast geometry at it."""

    model: str
    theta_tilde: ParamVector
    value: float
    eval: ContrastEval
    std_err: np.ndarray
    converged: bool
    iterations: int
    restarts_used: int
    restart_values: tuple
    n: int
    delta: float


def default_init(model: ModelSpec, data: Trajectory) -> ParamVector:
    """Moment-based starting point.

    Uses the model's initializer when it has one (least squares of dx/delta
    on the drift regressors, realized-volatility or variance-regression
    diffusion scales). Without one: 0.1 per drift parameter, the realized
    volatility sqrt(sum dx^2 / (n delta)) on the leading diffusion parameter
    and 0.5 on the rest.
    """
    if model.init is not None:
        try:
            pv = model.init(data.x, data.delta)
            if pv.p == model.p and pv.q == model.q:
                return pv
        except Exception:
            pass
    dx = np.diff(data.x)
    rv = float(np.sqrt(np.sum(dx * dx) / (dx.size * data.delta)))
    alpha = (0.1,) * model.p
    beta = (max(rv, 1e-8),) + (0.5,) * (model.q - 1)
    return ParamVector(alpha, beta)


def _within_bounds(bounds, vec) -> bool:
    if bounds is None:
        return True
    for v, b in zip(vec, bounds):
        if b is None:
            continue
        if b[0] is not None and v < b[0]:
            return False
        if b[1] is not None and v > b[1]:
            return False
    return True


def _objective(model: ModelSpec, data: Trajectory):
    p, q = model.p, model.q
    zeros = np.zeros(p + q)

    def fun_grad(vec):
        if not np.all(np.isfinite(vec)) or not _within_bounds(model.bounds, vec):
            return BIG, zeros
        theta = ParamVector.from_theta(vec, p, q)
        try:
            value = quasi_loglik(model, theta, data)
            grad = quasi_grad(model, theta, data)
        except (DomainError, NonFiniteError):
            return BIG, zeros
        return value, grad

    return fun_grad


def fit(model: ModelSpec, data: Trajectory, init=None, options: FitOptions = None) -> FitResult:
    """Minimize the quasi-likelihood contrast over the model's parameters.

    Args:
        model: model specification.
        data: equally spaced observations.
        init: optional starting point; defaults to default_init(model, data).
        options: optimizer controls.

    Returns:
        FitResult; converged=False flags that no restart met the gradient
        criterion (the best point found is still returned).

    Raises:
        ValueError: fewer increments than parameters.
        DomainError: no admissible starting point.
    """
    options = options or FitOptions()
    if data.n < model.p + model.q:
        raise ValueError(
            f"need at least p + q = {model.p + model.q} increments, got {data.n}"
        )
    start = model.params(init) if init is not None else default_init(model, data)
    x0 = start.theta
    if model.bounds is not None:
        lo = np.array([-np.inf if b is None or b[0] is None else b[0] for b in model.bounds])
        hi = np.array([np.inf if b is None or b[1] is None else b[1] for b in model.bounds])
        x0 = np.minimum(np.maximum(x0, lo), hi)
    rng = np.random.default_rng(options.restart_seed)
    scale = 0.5 * np.abs(x0) + 0.1
    starts = [x0]
    for _ in range(max(options.restarts, 1) - 1):
        s = x0 + rng.standard_normal(x0.size) * scale
        if model.bounds is not None:
            s = np.minimum(np.maximum(s, lo), hi)
        starts.append(s)

    fun_grad = _objective(model, data)
    runs = []
    for s in starts:
        f0, _ = fun_grad(s)
        if f0 >= BIG:
            continue
        cap = options.max_step
        if cap is None:
            cap = 0.25 * (1.0 + float(np.max(np.abs(s))))
        runs.append(
            minimize_bfgs(
                fun_grad,
                s,
                grad_tol=options.grad_tol,
                step_tol=options.step_tol,
                max_iter=options.max_iter,
                max_step=cap,
                bounds=model.bounds,
            )
        )
    if not runs:
        raise DomainError(f"({model.name}) no admissible starting point", term="init")
    # converged basins outrank unconverged ones whatever their value: an
    # unconverged run may sit on a decreasing near-flat ridge with an
    # enormous gradient, and its value is not a trustworthy minimum
    best = min(runs, key=lambda r: (not r.converged, r.f))
    theta_tilde = ParamVector.from_theta(best.x, model.p, model.q)
    ev = evaluate_contrast(model, theta_tilde, data)
    std_err = np.sqrt(np.diag(np.linalg.inv(ev.hess)))
    return FitResult(
        model=model.name,
        theta_tilde=theta_tilde,
        value=best.f,
        eval=ev,
        std_err=std_err,
        converged=best.converged,
        iterations=best.iterations,
        restarts_used=len(runs),
        restart_values=tuple(float(r.f) for r in runs),
        n=data.n,
        delta=data.delta,
    )
