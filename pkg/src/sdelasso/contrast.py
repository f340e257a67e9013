"""Euler quasi-likelihood contrast for discretely observed scalar diffusions.

For observations x_0..x_n at spacing delta the contrast is

    l_n(theta) = 1/2 sum_{i=1..n} [ log S_{i-1}(beta)
                 + (dx_i - delta b_{i-1}(alpha))^2 / (delta S_{i-1}(beta)) ],

with b the drift, S = sigma^2 the squared diffusion, both evaluated at the
left endpoint x_{i-1}. The gradient is analytic; the Hessian is obtained by
central finite differences of the analytic gradient and symmetrized.

Drift and diffusion parameters converge at different rates, 1/sqrt(n delta)
and 1/sqrt(n). RateMatrix holds the diagonal normalization

    phi(n) = diag( (n delta)^{-1} I_p , n^{-1} I_q ),

and scaled_hess computes phi^(1/2) H phi^(1/2), whose blocks stabilize as n
grows: the drift block divided by n delta, the diffusion block by n, the
cross blocks by n sqrt(delta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NonFiniteError
from .models import ModelSpec, ParamVector, diffusion_beta_at, drift_alpha_at
from .simulate import Trajectory

__all__ = [
    "RateMatrix",
    "ContrastEval",
    "quasi_loglik",
    "quasi_grad",
    "quasi_hess",
    "scaled_hess",
    "repair_hessian",
    "evaluate_contrast",
]

_FD_STEP = float(np.cbrt(np.finfo(float).eps))


@dataclass(frozen=True)
class RateMatrix:
    """Diagonal rate normalization phi(n) for a (p, q) parameter partition."""

    n: int
    delta: float
    p: int
    q: int

    def __post_init__(self):
        if int(self.n) < 1:
            raise ValueError("n must be a positive integer")
        if not (float(self.delta) > 0.0 and np.isfinite(self.delta)):
            raise ValueError("delta must be positive and finite")
        if int(self.p) < 1 or int(self.q) < 1:
            raise ValueError("p and q must be positive")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))

    @property
    def diagonal(self) -> np.ndarray:
        """Diagonal of phi(n): 1/(n delta) on drift, 1/n on diffusion coordinates."""
        nd = self.n * self.delta
        return np.concatenate(
            [np.full(self.p, 1.0 / nd), np.full(self.q, 1.0 / self.n)]
        )


def scaled_hess(hess: np.ndarray, rate: RateMatrix) -> np.ndarray:
    """phi(n)^(1/2) H phi(n)^(1/2) for the diagonal rate matrix."""
    hess = np.asarray(hess, dtype=float)
    d = rate.p + rate.q
    if hess.shape != (d, d):
        raise ValueError(f"hessian shape {hess.shape} does not match p + q = {d}")
    r = np.sqrt(rate.diagonal)
    return hess * np.outer(r, r)


def _prepared(model: ModelSpec, theta, data: Trajectory):
    theta = model.params(theta)
    x = data.x
    if x.size < 2:
        raise ValueError("need at least one increment")
    xs = x[:-1]
    if not model.admissible(theta, xs):
        raise DomainError(
            f"({model.name}) data/parameter pair leaves the admissible region",
            term=f"{model.name} guard",
        )
    dx = np.diff(x)
    return theta, xs, dx


def quasi_loglik(model: ModelSpec, theta, data: Trajectory) -> float:
    """Contrast value l_n(theta). Raises DomainError off the admissible set."""
    theta, xs, dx = _prepared(model, theta, data)
    delta = data.delta
    # trial points far out (optimizer probes) may overflow; the finite checks
    # below turn that into exceptions, so the warnings are silenced here
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        s = np.asarray(model.diffusion(theta.beta, xs), dtype=float)
        big_s = s * s
        if not np.all(big_s > 0.0):
            raise DomainError(
                f"({model.name}) diffusion variance is not positive on the data",
                term="nonpositive diffusion variance",
            )
        b = np.asarray(model.drift(theta.alpha, xs), dtype=float)
        resid = dx - delta * b
        value = 0.5 * float(
            np.sum(np.log(big_s)) + np.sum(resid * resid / (delta * big_s))
        )
    if not np.isfinite(value):
        raise NonFiniteError(f"({model.name}) contrast value is not finite")
    return value


def quasi_grad(model: ModelSpec, theta, data: Trajectory) -> np.ndarray:
    """Analytic gradient of l_n in (alpha, beta) order, shape (p + q,)."""
    theta, xs, dx = _prepared(model, theta, data)
    delta = data.delta
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        s = np.asarray(model.diffusion(theta.beta, xs), dtype=float)
        big_s = s * s
        if not np.all(big_s > 0.0):
            raise DomainError(
                f"({model.name}) diffusion variance is not positive on the data",
                term="nonpositive diffusion variance",
            )
        b = np.asarray(model.drift(theta.alpha, xs), dtype=float)
        resid = dx - delta * b
        db = drift_alpha_at(model, theta.alpha, xs)
        ds = diffusion_beta_at(model, theta.beta, xs)
        g_alpha = -db @ (resid / big_s)
        g_beta = ds @ ((1.0 / s) * (1.0 - resid * resid / (delta * big_s)))
        grad = np.concatenate([np.atleast_1d(g_alpha), np.atleast_1d(g_beta)])
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError(f"({model.name}) contrast gradient is not finite")
    return grad


def _grad_at(model, vec, p, q, data):
    return quasi_grad(model, ParamVector.from_theta(vec, p, q), data)


def _fd_hess(model: ModelSpec, theta: ParamVector, data: Trajectory) -> np.ndarray:
    """Unsymmetrized Hessian: central differences of the analytic gradient."""
    p, q = theta.p, theta.q
    vec = theta.theta
    d = vec.size
    cols = np.empty((d, d), dtype=float)
    for j in range(d):
        h = _FD_STEP * max(1.0, abs(vec[j]))
        up = vec.copy()
        dn = vec.copy()
        up[j] += h
        dn[j] -= h
        try:
            g_up = _grad_at(model, up, p, q, data)
        except (DomainError, NonFiniteError):
            g_up = None
        try:
            g_dn = _grad_at(model, dn, p, q, data)
        except (DomainError, NonFiniteError):
            g_dn = None
        if g_up is not None and g_dn is not None:
            cols[:, j] = (g_up - g_dn) / (2.0 * h)
        else:
            # one-sided fallback when a perturbation leaves the admissible set
            g0 = _grad_at(model, vec, p, q, data)
            if g_up is not None:
                cols[:, j] = (g_up - g0) / h
            elif g_dn is not None:
                cols[:, j] = (g0 - g_dn) / h
            else:
                raise DomainError(
                    f"({model.name}) cannot difference the gradient at coordinate {j}",
                    term="hessian step",
                )
    return cols


def quasi_hess(model: ModelSpec, theta, data: Trajectory) -> np.ndarray:
    """Symmetrized finite-difference Hessian of l_n, shape (p+q, p+q)."""
    theta = model.params(theta)
    raw = _fd_hess(model, theta, data)
    return 0.5 * (raw + raw.T)


def repair_hessian(hess: np.ndarray):
    """Ensure positive definiteness by a minimal ridge shift.

    Returns (hess_pd, repaired, ridge): the matrix itself when Cholesky
    succeeds, otherwise hess + ridge * I with
    ridge = max(1e-8, 1.1 |lambda_min|), escalated tenfold in the rare case
    that is still not factorizable.
    """
    hess = np.asarray(hess, dtype=float)
    try:
        np.linalg.cholesky(hess)
        return hess, False, 0.0
    except np.linalg.LinAlgError:
        pass
    lam_min = float(np.linalg.eigvalsh(hess)[0])
    ridge = max(1e-8, 1.1 * abs(lam_min))
    eye = np.eye(hess.shape[0])
    for _ in range(60):
        try:
            np.linalg.cholesky(hess + ridge * eye)
            return hess + ridge * eye, True, ridge
        except np.linalg.LinAlgError:
            ridge *= 10.0
    raise NonFiniteError("hessian cannot be repaired to positive definite")


@dataclass(frozen=True)
class ContrastEval:
    """Contrast value, gradient and (repaired) Hessian at one parameter point.

    hess is positive definite: when the finite-difference Hessian fails a
    Cholesky factorization, a ridge is added and hess_repaired/ridge record it.
    scaled_hess is phi(n)^(1/2) hess phi(n)^(1/2).
    """

    value: float
    grad: np.ndarray
    hess: np.ndarray
    scaled_hess: np.ndarray
    hess_repaired: bool
    ridge: float


def evaluate_contrast(model: ModelSpec, theta, data: Trajectory) -> ContrastEval:
    """Evaluate value, gradient, PD-repaired Hessian and its rate scaling."""
    theta = model.params(theta)
    value = quasi_loglik(model, theta, data)
    grad = quasi_grad(model, theta, data)
    hess, repaired, ridge = repair_hessian(quasi_hess(model, theta, data))
    rate = RateMatrix(n=data.n, delta=data.delta, p=theta.p, q=theta.q)
    return ContrastEval(
        value=value,
        grad=grad,
        hess=hess,
        scaled_hess=scaled_hess(hess, rate),
        hess_repaired=repaired,
        ridge=ridge,
    )
