"""Scalar diffusion model specifications.

A model is the pair of coefficient functions of

    dX_t = b(alpha, X_t) dt + sigma(beta, X_t) dW_t,

with the drift parameters alpha (length p) kept separate from the diffusion
parameters beta (length q): the two groups converge at different rates and are
penalized separately. A ModelSpec bundles the coefficient functions, their
partial derivatives (any missing partial falls back to central finite
differences), a domain guard, and an optional moment-based initializer.

Built-in models, addressable by name through ``get_model``:

    ckls              dX = (a + b X) dt + sigma X^gamma dW          p=2, q=2
    fig1              dX = -t1 (X - t2) dt + (t3 + t4 X)^t5 dW      p=2, q=3
    ou                dX = -t1 (X - t2) dt + sigma dW               p=2, q=1
    vasicek           dX = (a + b X) dt + sigma dW                  p=2, q=1
    cir85             dX = (a + b X) dt + sigma X^(1/2) dW          p=2, q=1
    gbm               dX = b X dt + sigma X dW                      p=1, q=1
    cev               dX = b X dt + sigma X^gamma dW                p=1, q=2
    merton            dX = a dt + sigma dW                          p=1, q=1
    dothan            dX = sigma X dW                               p=1, q=1
    brennan-schwartz  dX = (a + b X) dt + sigma X dW                p=2, q=1
    cir80             dX = sigma X^(3/2) dW                         p=1, q=1

``dothan`` and ``cir80`` have no drift term; they carry one inert drift
parameter (drift identically zero, zero gradient) so that every model exposes
at least one parameter per group.

``ckls_reduce`` maps a CKLS estimate plus its selected zero pattern to the
named nested short-rate model it corresponds to.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidReductionError, NonFiniteError

__all__ = [
    "ParamVector",
    "ModelSpec",
    "eval_drift",
    "eval_diffusion",
    "drift_x_at",
    "drift_xx_at",
    "diffusion_x_at",
    "diffusion_xx_at",
    "drift_alpha_at",
    "diffusion_beta_at",
    "get_model",
    "model_names",
    "ckls_reduce",
    "CKLS_REDUCTIONS",
]

# Step size for finite-difference fallbacks: cbrt(machine eps) scaled by the
# magnitude of the point, the usual choice for central differences.
_FD_STEP = float(np.cbrt(np.finfo(float).eps))


@dataclass(frozen=True)
class ParamVector:
    """Partitioned parameter vector theta = (alpha, beta).

    alpha holds the p drift parameters, beta the q diffusion parameters.
    Both groups must be non-empty and all entries finite.
    """

    alpha: tuple
    beta: tuple

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha)
        beta = tuple(float(b) for b in self.beta)
        if len(alpha) < 1 or len(beta) < 1:
            raise ValueError("ParamVector needs p >= 1 drift and q >= 1 diffusion parameters")
        if not all(np.isfinite(alpha)) or not all(np.isfinite(beta)):
            raise ValueError("ParamVector entries must be finite")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def p(self) -> int:
        return len(self.alpha)

    @property
    def q(self) -> int:
        return len(self.beta)

    @property
    def dim(self) -> int:
        return len(self.alpha) + len(self.beta)

    @property
    def theta(self) -> np.ndarray:
        """Concatenated parameter vector (alpha first, then beta)."""
        return np.array(self.alpha + self.beta, dtype=float)

    @classmethod
    def from_theta(cls, theta, p: int, q: int) -> "ParamVector":
        theta = np.asarray(theta, dtype=float).ravel()
        if theta.size != p + q:
            raise ValueError(f"expected {p + q} parameters, got {theta.size}")
        return cls(tuple(theta[:p]), tuple(theta[p:]))


@dataclass(frozen=True)
class ModelSpec:
    """Coefficient functions and metadata for one scalar diffusion family.

    Coefficient callables take (params, x) where params is the relevant
    parameter tuple and x is a float or ndarray; they must be vectorized in x.
    Derivative fields may be None, in which case central finite differences
    with step cbrt(eps) * max(1, |x|) are used.

    guard(theta, x) returns True (elementwise) where the pair is admissible.
    bounds, when given, is a (p+q)-list of (lo, hi) box constraints applied by
    the fitting routine; None entries leave a side unconstrained.
    """

    name: str
    p: int
    q: int
    drift: Callable
    diffusion: Callable
    guard: Optional[Callable] = None
    drift_x: Optional[Callable] = None
    drift_xx: Optional[Callable] = None
    diffusion_x: Optional[Callable] = None
    diffusion_xx: Optional[Callable] = None
    drift_alpha: Optional[Callable] = None
    diffusion_beta: Optional[Callable] = None
    init: Optional[Callable] = None
    labels: tuple = field(default=None)
    bounds: tuple = field(default=None)

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("ModelSpec needs p >= 1 and q >= 1")
        if self.labels is None:
            names = tuple(f"alpha{i + 1}" for i in range(self.p)) + tuple(
                f"beta{i + 1}" for i in range(self.q)
            )
            object.__setattr__(self, "labels", names)
        if len(self.labels) != self.p + self.q:
            raise ValueError("labels must have length p + q")

    def params(self, theta) -> ParamVector:
        """Coerce a flat sequence (or ParamVector) into this model's partition."""
        if isinstance(theta, ParamVector):
            if theta.p != self.p or theta.q != self.q:
                raise ValueError(f"model {self.name} expects p={self.p}, q={self.q}")
            return theta
        return ParamVector.from_theta(theta, self.p, self.q)

    def admissible(self, theta: ParamVector, x) -> bool:
        """True when the guard passes at every point of x."""
        if self.guard is None:
            return True
        return bool(np.all(self.guard(theta, x)))


def _domain_check(model: ModelSpec, theta: ParamVector, x):
    if not model.admissible(theta, x):
        raise DomainError(
            f"({model.name}) state/parameter outside the admissible region",
            x=x,
            term=f"{model.name} guard",
        )


def eval_drift(model: ModelSpec, theta, x):
    """Drift b(alpha, x) with domain and finiteness checks."""
    theta = model.params(theta)
    _domain_check(model, theta, x)
    val = model.drift(theta.alpha, x)
    if not np.all(np.isfinite(val)):
        raise NonFiniteError(f"({model.name}) drift is not finite")
    return val


def eval_diffusion(model: ModelSpec, theta, x):
    """Diffusion sigma(beta, x) with domain and finiteness checks."""
    theta = model.params(theta)
    _domain_check(model, theta, x)
    val = model.diffusion(theta.beta, x)
    if not np.all(np.isfinite(val)):
        raise NonFiniteError(f"({model.name}) diffusion is not finite")
    return val


# ---------------------------------------------------------------------------
# finite-difference fallbacks for missing partials
# ---------------------------------------------------------------------------

def _fd_x(fn, params, x):
    h = _FD_STEP * np.maximum(1.0, np.abs(x))
    return (fn(params, x + h) - fn(params, x - h)) / (2.0 * h)


def _fd_param_jac(fn, params, x):
    """Rows of d fn / d params_j by central differences, shape (len(params),) + shape(x)."""
    params = np.asarray(params, dtype=float)
    rows = []
    for j in range(params.size):
        h = _FD_STEP * max(1.0, abs(params[j]))
        up = params.copy()
        dn = params.copy()
        up[j] += h
        dn[j] -= h
        rows.append((fn(tuple(up), x) - fn(tuple(dn), x)) / (2.0 * h))
    return np.stack([np.asarray(r, dtype=float) for r in rows])


def drift_x_at(model: ModelSpec, alpha, x):
    if model.drift_x is not None:
        return model.drift_x(alpha, x)
    return _fd_x(model.drift, alpha, x)


def drift_xx_at(model: ModelSpec, alpha, x):
    if model.drift_xx is not None:
        return model.drift_xx(alpha, x)
    return _fd_x(lambda a, y: drift_x_at(model, a, y), alpha, x)


def diffusion_x_at(model: ModelSpec, beta, x):
    if model.diffusion_x is not None:
        return model.diffusion_x(beta, x)
    return _fd_x(model.diffusion, beta, x)


def diffusion_xx_at(model: ModelSpec, beta, x):
    if model.diffusion_xx is not None:
        return model.diffusion_xx(beta, x)
    return _fd_x(lambda b, y: diffusion_x_at(model, b, y), beta, x)


def drift_alpha_at(model: ModelSpec, alpha, x):
    """Gradient of the drift in alpha, shape (p,) + shape(x)."""
    if model.drift_alpha is not None:
        return np.asarray(model.drift_alpha(alpha, x), dtype=float)
    return _fd_param_jac(model.drift, alpha, x)


def diffusion_beta_at(model: ModelSpec, beta, x):
    """Gradient of the diffusion in beta, shape (q,) + shape(x)."""
    if model.diffusion_beta is not None:
        return np.asarray(model.diffusion_beta(beta, x), dtype=float)
    return _fd_param_jac(model.diffusion, beta, x)


# ---------------------------------------------------------------------------
# built-in coefficient functions (module level so ModelSpecs stay picklable)
# ---------------------------------------------------------------------------

def _const_like(x, c):
    return np.full(np.shape(x), float(c)) if np.ndim(x) else float(c)


def _zeros_like(x):
    return np.zeros(np.shape(x)) if np.ndim(x) else 0.0


def _ones_like(x):
    return np.ones(np.shape(x)) if np.ndim(x) else 1.0


# --- affine drift a + b x (ckls, vasicek, cir85, brennan-schwartz) ---

def _affine_drift(alpha, x):
    return alpha[0] + alpha[1] * x


def _affine_drift_x(alpha, x):
    return _const_like(x, alpha[1])


def _affine_drift_xx(alpha, x):
    return _zeros_like(x)


def _affine_drift_alpha(alpha, x):
    return np.stack([np.asarray(_ones_like(x), dtype=float), np.asarray(x, dtype=float)])


# --- mean-reverting drift -t1 (x - t2) (ou, fig1) ---

def _mr_drift(alpha, x):
    return -alpha[0] * (x - alpha[1])


def _mr_drift_x(alpha, x):
    return _const_like(x, -alpha[0])


def _mr_drift_alpha(alpha, x):
    return np.stack(
        [np.asarray(-(x - alpha[1]), dtype=float), np.asarray(_const_like(x, alpha[0]), dtype=float)]
    )


# --- proportional drift b x (gbm, cev) ---

def _prop_drift(alpha, x):
    return alpha[0] * x


def _prop_drift_x(alpha, x):
    return _const_like(x, alpha[0])


def _prop_drift_alpha(alpha, x):
    return np.stack([np.asarray(x, dtype=float)])


# --- constant drift a (merton) ---

def _const_drift(alpha, x):
    return _const_like(x, alpha[0])


def _const_drift_x(alpha, x):
    return _zeros_like(x)


def _const_drift_alpha(alpha, x):
    return np.stack([np.asarray(_ones_like(x), dtype=float)])


# --- inert drift 0 (dothan, cir80) ---

def _zero_drift(alpha, x):
    return 0.0 * x


def _zero_drift_x(alpha, x):
    return _zeros_like(x)


def _zero_drift_alpha(alpha, x):
    return np.stack([np.asarray(_zeros_like(x), dtype=float)])


# --- power diffusion sigma x^gamma (ckls, cev) ---

def _power_diffusion(beta, x):
    return beta[0] * x ** beta[1]


def _power_diffusion_x(beta, x):
    return beta[0] * beta[1] * x ** (beta[1] - 1.0)


def _power_diffusion_xx(beta, x):
    return beta[0] * beta[1] * (beta[1] - 1.0) * x ** (beta[1] - 2.0)


def _power_diffusion_beta(beta, x):
    xg = x ** beta[1]
    return np.stack([np.asarray(xg, dtype=float), np.asarray(beta[0] * xg * np.log(x), dtype=float)])


def _power_guard(theta: ParamVector, x):
    return (theta.beta[0] > 0.0) & (np.asarray(x) > 0.0)


# --- constant diffusion sigma (ou, vasicek, merton) ---

def _const_diffusion(beta, x):
    return _const_like(x, beta[0])


def _const_diffusion_x(beta, x):
    return _zeros_like(x)


def _const_diffusion_beta(beta, x):
    return np.stack([np.asarray(_ones_like(x), dtype=float)])


def _positive_scale_guard(theta: ParamVector, x):
    ok = theta.beta[0] > 0.0
    return np.full(np.shape(x), ok) if np.ndim(x) else ok


# --- fixed-power diffusions sigma x^g for g in {1/2, 1, 3/2} ---

def _sqrt_diffusion(beta, x):
    return beta[0] * x ** 0.5


def _sqrt_diffusion_x(beta, x):
    return 0.5 * beta[0] * x ** -0.5


def _sqrt_diffusion_xx(beta, x):
    return -0.25 * beta[0] * x ** -1.5


def _sqrt_diffusion_beta(beta, x):
    return np.stack([np.asarray(x ** 0.5, dtype=float)])


def _linear_diffusion(beta, x):
    return beta[0] * x


def _linear_diffusion_x(beta, x):
    return _const_like(x, beta[0])


def _linear_diffusion_xx(beta, x):
    return _zeros_like(x)


def _linear_diffusion_beta(beta, x):
    return np.stack([np.asarray(x, dtype=float)])


def _x32_diffusion(beta, x):
    return beta[0] * x ** 1.5


def _x32_diffusion_x(beta, x):
    return 1.5 * beta[0] * x ** 0.5


def _x32_diffusion_xx(beta, x):
    return 0.75 * beta[0] * x ** -0.5


def _x32_diffusion_beta(beta, x):
    return np.stack([np.asarray(x ** 1.5, dtype=float)])


# --- affine power diffusion (t3 + t4 x)^t5 (fig1) ---

def _affpow_diffusion(beta, x):
    return (beta[0] + beta[1] * x) ** beta[2]


def _affpow_diffusion_x(beta, x):
    return beta[2] * beta[1] * (beta[0] + beta[1] * x) ** (beta[2] - 1.0)


def _affpow_diffusion_xx(beta, x):
    return beta[2] * (beta[2] - 1.0) * beta[1] ** 2 * (beta[0] + beta[1] * x) ** (beta[2] - 2.0)


def _affpow_diffusion_beta(beta, x):
    t = beta[0] + beta[1] * x
    tg1 = t ** (beta[2] - 1.0)
    return np.stack(
        [
            np.asarray(beta[2] * tg1, dtype=float),
            np.asarray(beta[2] * np.asarray(x) * tg1, dtype=float),
            np.asarray(t ** beta[2] * np.log(t), dtype=float),
        ]
    )


def _affpow_guard(theta: ParamVector, x):
    return (theta.beta[0] + theta.beta[1] * np.asarray(x)) > 0.0


# ---------------------------------------------------------------------------
# moment-based initializers (used by the fit's default starting point)
# ---------------------------------------------------------------------------

def _ls(y, cols):
    """Least squares of y on the given column vectors."""
    design = np.column_stack(cols)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return coef


def _drift_rate(x, delta):
    return np.diff(x) / delta


def _realized_vol(x, delta):
    dx = np.diff(x)
    return float(np.sqrt(np.sum(dx * dx) / (dx.size * delta)))


def _init_affine_alpha(x, delta):
    xs = x[:-1]
    c = _ls(_drift_rate(x, delta), [np.ones_like(xs), xs])
    return float(c[0]), float(c[1])


def _init_mr_alpha(x, delta):
    """Map the (1, x) regression onto the mean-reversion parameterization."""
    c0, c1 = _init_affine_alpha(x, delta)
    if abs(c1) < 1e-8:
        return 0.1, float(np.mean(x))
    t1 = -c1
    return t1, c0 / t1


def _init_prop_alpha(x, delta):
    xs = x[:-1]
    c = _ls(_drift_rate(x, delta), [xs])
    return (float(c[0]),)


def _init_log_qv(x, delta, drift_alpha_fn, alpha):
    """sigma, gamma from regressing log squared increments on log x.

    log((dx - b dt)^2 / dt) has mean 2 log sigma + 2 gamma log x + E[log chi2_1];
    the additive offset E[log chi2_1] = -1.27036... is corrected for.
    """
    xs = x[:-1]
    resid = np.diff(x) - delta * drift_alpha_fn(alpha, xs)
    r2 = resid * resid / delta
    keep = (r2 > 0) & (xs > 0)
    if np.count_nonzero(keep) < 8:
        return 0.5, 0.5
    c = _ls(np.log(r2[keep]), [np.ones(np.count_nonzero(keep)), np.log(xs[keep])])
    gamma = float(c[1] / 2.0)
    sigma = float(np.exp((c[0] + 1.2703628454614782) / 2.0))
    if not (np.isfinite(sigma) and np.isfinite(gamma)) or sigma <= 0:
        return 0.5, 0.5
    return sigma, gamma


def _ckls_init(x, delta):
    alpha = _init_affine_alpha(x, delta)
    beta = _init_log_qv(x, delta, _affine_drift, alpha)
    return ParamVector(alpha, beta)


def _vasicek_init(x, delta):
    alpha = _init_affine_alpha(x, delta)
    return ParamVector(alpha, (max(_realized_vol(x, delta), 1e-8),))


def _cir85_init(x, delta):
    alpha = _init_affine_alpha(x, delta)
    xs = x[:-1]
    resid = np.diff(x) - delta * _affine_drift(alpha, xs)
    denom = delta * np.sum(np.abs(xs))
    s2 = np.sum(resid * resid) / denom if denom > 0 else 0.25
    return ParamVector(alpha, (float(np.sqrt(max(s2, 1e-16))),))


def _ou_init(x, delta):
    alpha = _init_mr_alpha(x, delta)
    return ParamVector(alpha, (max(_realized_vol(x, delta), 1e-8),))


def _fig1_init(x, delta):
    """Exponent starts at 1/2; the affine base comes from a variance regression."""
    alpha = _init_mr_alpha(x, delta)
    xs = x[:-1]
    resid = np.diff(x) - delta * _mr_drift(alpha, xs)
    c = _ls(resid * resid / delta, [np.ones_like(xs), xs])
    t3, t4 = float(c[0]), float(c[1])
    floor = np.min(t3 + t4 * xs)
    if not (np.isfinite(t3) and np.isfinite(t4)) or floor <= 0:
        scale = float(np.mean(resid * resid / delta))
        shift = max(scale, 1e-6) * 1e-3 - min(floor, 0.0)
        t3 = t3 + shift if np.isfinite(t3) else max(scale, 1e-6)
        if not np.isfinite(t4):
            t4 = 0.0
    return ParamVector(alpha, (t3, t4, 0.5))


def _gbm_init(x, delta):
    alpha = _init_prop_alpha(x, delta)
    xs = x[:-1]
    s2 = np.sum(np.diff(x) ** 2) / (delta * np.sum(xs * xs))
    return ParamVector(alpha, (float(np.sqrt(max(s2, 1e-16))),))


def _cev_init(x, delta):
    alpha = _init_prop_alpha(x, delta)
    beta = _init_log_qv(x, delta, _prop_drift, alpha)
    return ParamVector(alpha, beta)


def _merton_init(x, delta):
    alpha = (float(np.mean(_drift_rate(x, delta))),)
    return ParamVector(alpha, (max(_realized_vol(x, delta), 1e-8),))


def _dothan_init(x, delta):
    xs = x[:-1]
    s2 = np.sum(np.diff(x) ** 2) / (delta * np.sum(xs * xs))
    return ParamVector((0.0,), (float(np.sqrt(max(s2, 1e-16))),))


def _brennan_init(x, delta):
    alpha = _init_affine_alpha(x, delta)
    xs = x[:-1]
    resid = np.diff(x) - delta * _affine_drift(alpha, xs)
    s2 = np.sum(resid * resid) / (delta * np.sum(xs * xs))
    return ParamVector(alpha, (float(np.sqrt(max(s2, 1e-16))),))


def _cir80_init(x, delta):
    xs = x[:-1]
    s2 = np.sum(np.diff(x) ** 2) / (delta * np.sum(np.abs(xs) ** 3))
    return ParamVector((0.0,), (float(np.sqrt(max(s2, 1e-16))),))


# ---------------------------------------------------------------------------
# registry
# ---------------------------------------------------------------------------

_MODELS = {
    "ckls": ModelSpec(
        name="ckls",
        p=2,
        q=2,
        drift=_affine_drift,
        diffusion=_power_diffusion,
        guard=_power_guard,
        drift_x=_affine_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_power_diffusion_x,
        diffusion_xx=_power_diffusion_xx,
        drift_alpha=_affine_drift_alpha,
        diffusion_beta=_power_diffusion_beta,
        init=_ckls_init,
        labels=("alpha", "beta", "sigma", "gamma"),
    ),
    "fig1": ModelSpec(
        name="fig1",
        p=2,
        q=3,
        drift=_mr_drift,
        diffusion=_affpow_diffusion,
        guard=_affpow_guard,
        drift_x=_mr_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_affpow_diffusion_x,
        diffusion_xx=_affpow_diffusion_xx,
        drift_alpha=_mr_drift_alpha,
        diffusion_beta=_affpow_diffusion_beta,
        init=_fig1_init,
        labels=("theta1", "theta2", "theta3", "theta4", "theta5"),
        # the diffusion (theta3 + theta4 x)^theta5 must define an ergodic
        # process on the whole state space (0, inf), not just fit the
        # observed range: positivity as x -> 0+ forces theta3 >= 0, as
        # x -> inf forces theta4 >= 0, and at-most-linear growth of the
        # diffusion forces theta5 <= 1 (theta5 >= 0 keeps it bounded near
        # 0). Without these the contrast has spurious minima where the
        # fitted diffusion degenerates at the sample minimum
        # (theta3 + theta4 min(x) -> 0+) or where theta5 blows up against a
        # base pinned near 1, both mimicking the true diffusion on the
        # observed range only.
        bounds=(None, None, (0.0, None), (0.0, None), (0.0, 1.0)),
    ),
    "ou": ModelSpec(
        name="ou",
        p=2,
        q=1,
        drift=_mr_drift,
        diffusion=_const_diffusion,
        guard=_positive_scale_guard,
        drift_x=_mr_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_const_diffusion_x,
        diffusion_xx=_const_diffusion_x,
        drift_alpha=_mr_drift_alpha,
        diffusion_beta=_const_diffusion_beta,
        init=_ou_init,
        labels=("theta1", "theta2", "sigma"),
    ),
    "vasicek": ModelSpec(
        name="vasicek",
        p=2,
        q=1,
        drift=_affine_drift,
        diffusion=_const_diffusion,
        guard=_positive_scale_guard,
        drift_x=_affine_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_const_diffusion_x,
        diffusion_xx=_const_diffusion_x,
        drift_alpha=_affine_drift_alpha,
        diffusion_beta=_const_diffusion_beta,
        init=_vasicek_init,
        labels=("alpha", "beta", "sigma"),
    ),
    "cir85": ModelSpec(
        name="cir85",
        p=2,
        q=1,
        drift=_affine_drift,
        diffusion=_sqrt_diffusion,
        guard=_power_guard,
        drift_x=_affine_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_sqrt_diffusion_x,
        diffusion_xx=_sqrt_diffusion_xx,
        drift_alpha=_affine_drift_alpha,
        diffusion_beta=_sqrt_diffusion_beta,
        init=_cir85_init,
        labels=("alpha", "beta", "sigma"),
    ),
    "gbm": ModelSpec(
        name="gbm",
        p=1,
        q=1,
        drift=_prop_drift,
        diffusion=_linear_diffusion,
        guard=_power_guard,
        drift_x=_prop_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_linear_diffusion_x,
        diffusion_xx=_linear_diffusion_xx,
        drift_alpha=_prop_drift_alpha,
        diffusion_beta=_linear_diffusion_beta,
        init=_gbm_init,
        labels=("beta", "sigma"),
    ),
    "cev": ModelSpec(
        name="cev",
        p=1,
        q=2,
        drift=_prop_drift,
        diffusion=_power_diffusion,
        guard=_power_guard,
        drift_x=_prop_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_power_diffusion_x,
        diffusion_xx=_power_diffusion_xx,
        drift_alpha=_prop_drift_alpha,
        diffusion_beta=_power_diffusion_beta,
        init=_cev_init,
        labels=("beta", "sigma", "gamma"),
    ),
    "merton": ModelSpec(
        name="merton",
        p=1,
        q=1,
        drift=_const_drift,
        diffusion=_const_diffusion,
        guard=_positive_scale_guard,
        drift_x=_const_drift_x,
        drift_xx=_const_drift_x,
        diffusion_x=_const_diffusion_x,
        diffusion_xx=_const_diffusion_x,
        drift_alpha=_const_drift_alpha,
        diffusion_beta=_const_diffusion_beta,
        init=_merton_init,
        labels=("alpha", "sigma"),
    ),
    "dothan": ModelSpec(
        name="dothan",
        p=1,
        q=1,
        drift=_zero_drift,
        diffusion=_linear_diffusion,
        guard=_power_guard,
        drift_x=_zero_drift_x,
        drift_xx=_zero_drift_x,
        diffusion_x=_linear_diffusion_x,
        diffusion_xx=_linear_diffusion_xx,
        drift_alpha=_zero_drift_alpha,
        diffusion_beta=_linear_diffusion_beta,
        init=_dothan_init,
        labels=("inert", "sigma"),
    ),
    "brennan-schwartz": ModelSpec(
        name="brennan-schwartz",
        p=2,
        q=1,
        drift=_affine_drift,
        diffusion=_linear_diffusion,
        guard=_power_guard,
        drift_x=_affine_drift_x,
        drift_xx=_affine_drift_xx,
        diffusion_x=_linear_diffusion_x,
        diffusion_xx=_linear_diffusion_xx,
        drift_alpha=_affine_drift_alpha,
        diffusion_beta=_linear_diffusion_beta,
        init=_brennan_init,
        labels=("alpha", "beta", "sigma"),
    ),
    "cir80": ModelSpec(
        name="cir80",
        p=1,
        q=1,
        drift=_zero_drift,
        diffusion=_x32_diffusion,
        guard=_power_guard,
        drift_x=_zero_drift_x,
        drift_xx=_zero_drift_x,
        diffusion_x=_x32_diffusion_x,
        diffusion_xx=_x32_diffusion_xx,
        drift_alpha=_zero_drift_alpha,
        diffusion_beta=_x32_diffusion_beta,
        init=_cir80_init,
        labels=("inert", "sigma"),
    ),
}


def model_names() -> tuple:
    return tuple(sorted(_MODELS))


def get_model(name: str) -> ModelSpec:
    """Look up a built-in model by name."""
    try:
        return _MODELS[name]
    except KeyError:
        raise ValueError(
            f"unknown model '{name}'; available: {', '.join(sorted(_MODELS))}"
        ) from None


# ---------------------------------------------------------------------------
# nested-model reduction of the CKLS family
# ---------------------------------------------------------------------------

_LABEL_MERTON = "Merton (1973)"
_LABEL_VASICEK = "Vasicek (1977)"
_LABEL_CIR85 = "Cox, Ingersoll and Ross (1985)"
_LABEL_DOTHAN = "Dothan (1978)"
_LABEL_GBM = "Geometric Brownian Motion"
_LABEL_BRENNAN = "Brennan and Schwartz (1980)"
_LABEL_CIR80 = "Cox, Ingersoll and Ross (1980)"
_LABEL_CEV = "Constant Elasticity Variance"
_LABEL_CKLS = "CKLS (1992)"


def _embed_merton(t):
    return "merton", ParamVector((t[0],), (t[2],))


def _embed_vasicek(t):
    return "vasicek", ParamVector((t[0], t[1]), (t[2],))


def _embed_cir85(t):
    return "cir85", ParamVector((t[0], t[1]), (t[2],))


def _embed_dothan(t):
    return "dothan", ParamVector((0.0,), (t[2],))


def _embed_gbm(t):
    return "gbm", ParamVector((t[1],), (t[2],))


def _embed_brennan(t):
    return "brennan-schwartz", ParamVector((t[0], t[1]), (t[2],))


def _embed_cir80(t):
    return "cir80", ParamVector((0.0,), (t[2],))


def _embed_cev(t):
    return "cev", ParamVector((t[1],), (t[2], t[3]))


def _embed_ckls(t):
    return "ckls", ParamVector((t[0], t[1]), (t[2], t[3]))


# label -> function mapping a masked CKLS 4-vector onto the reduced model's
# parameters; used by the reduction-soundness checks and the reduce CLI.
CKLS_REDUCTIONS = {
    _LABEL_MERTON: _embed_merton,
    _LABEL_VASICEK: _embed_vasicek,
    _LABEL_CIR85: _embed_cir85,
    _LABEL_DOTHAN: _embed_dothan,
    _LABEL_GBM: _embed_gbm,
    _LABEL_BRENNAN: _embed_brennan,
    _LABEL_CIR80: _embed_cir80,
    _LABEL_CEV: _embed_cev,
    _LABEL_CKLS: _embed_ckls,
}

_GAMMA_TOL = 1e-9


def ckls_reduce(theta, zero_mask) -> str:
    """Name the nested short-rate model selected from the CKLS family.

    Args:
        theta: CKLS parameters (a, b, sigma, gamma), flat or ParamVector.
        zero_mask: iterable of coordinate indices (0=a, 1=b, 2=sigma, 3=gamma)
            that were selected to zero.

    Returns:
        The display name of the nested model whose zero pattern and gamma
        value match; "CKLS (1992)" when no named row matches.

    Raises:
        InvalidReductionError: if sigma (index 2) is in the mask.
        ValueError: on malformed input.
    """
    if isinstance(theta, ParamVector):
        theta = theta.theta
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != 4:
        raise ValueError("ckls_reduce expects 4 parameters (a, b, sigma, gamma)")
    mask = {int(i) for i in zero_mask}
    if not mask <= {0, 1, 2, 3}:
        raise ValueError("zero_mask entries must be coordinate indices 0..3")
    if 2 in mask:
        raise InvalidReductionError("sigma selected to zero: diffusion degenerates")

    gamma = 0.0 if 3 in mask else float(theta[3])

    def near(v):
        return abs(gamma - v) <= _GAMMA_TOL

    a_zero, b_zero = 0 in mask, 1 in mask
    if a_zero and b_zero:
        if near(1.0):
            return _LABEL_DOTHAN
        if near(1.5):
            return _LABEL_CIR80
        return _LABEL_CKLS
    if a_zero:
        if near(1.0):
            return _LABEL_GBM
        return _LABEL_CEV
    if b_zero:
        if near(0.0):
            return _LABEL_MERTON
        return _LABEL_CKLS
    if near(0.0):
        return _LABEL_VASICEK
    if near(0.5):
        return _LABEL_CIR85
    if near(1.0):
        return _LABEL_BRENNAN
    return _LABEL_CKLS
