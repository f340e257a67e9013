"""Adaptive-LASSO selection around the quasi-likelihood estimate.

The penalized estimator minimizes the quadratic approximation of the
contrast at the unpenalized estimate theta_tilde,

    F(theta) = (theta - theta_tilde)' H (theta - theta_tilde)
               + sum_j lam_j |alpha_j| + sum_k gam_k |beta_k|,

with H the (PD) contrast Hessian at theta_tilde and data-adaptive weights

    lam_j = lambda0 * |alpha_tilde_j|^(-delta1),
    gam_k = gamma0  * |beta_tilde_k|^(-delta2),

capped at 1e12 (a coordinate whose unpenalized estimate is below 1e-12 in
absolute value gets the cap outright, for numerical stability). Larger
exponents punish small preliminary estimates harder, which is what buys
selection consistency; both exponents default to 1.

F is minimized by cyclic coordinate descent, drift coordinates first, then
diffusion. Each coordinate update is the exact scalar minimizer, a soft
threshold

    theta_j <- S(c_j, w_j / (2 H_jj)),   S(z, t) = sign(z) max(|z| - t, 0),

so discarded coordinates are bitwise zero, no epsilon snapping involved.
The returned point is certified against the subgradient optimality (KKT)
conditions of F.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotPositiveDefiniteError
from .models import ModelSpec, ParamVector, ckls_reduce
from .qmle import FitResult
from .simulate import Trajectory

__all__ = [
    "WEIGHT_CAP",
    "PenaltyWeights",
    "CdInfo",
    "SelectionResult",
    "make_weights",
    "penalized_objective",
    "solve_penalized",
    "kkt_check",
    "select",
]

WEIGHT_CAP = 1e12
_TINY = 1e-12


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-coordinate L1 intensities plus the rule that produced them."""

    lam: tuple  # drift weights, length p
    gam: tuple  # diffusion weights, length q
    lambda0: float = 0.0
    gamma0: float = 0.0
    delta1: float = 1.0
    delta2: float = 1.0

    def __post_init__(self):
        lam = tuple(float(v) for v in self.lam)
        gam = tuple(float(v) for v in self.gam)
        if any(v < 0 or not np.isfinite(v) for v in lam + gam):
            raise ValueError("penalty weights must be finite and non-negative")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "gam", gam)

    @property
    def w(self) -> np.ndarray:
        return np.array(self.lam + self.gam, dtype=float)


def make_weights(
    theta_tilde: ParamVector,
    lambda0: float,
    gamma0: float,
    delta1: float = 1.0,
    delta2: float = 1.0,
) -> PenaltyWeights:
    """Adaptive weights from the unpenalized estimate.

    Zero intensity gives zero weights for that block. Otherwise
    w = intensity * |estimate|^(-exponent), capped at 1e12; estimates below
    1e-12 in magnitude get the cap directly.

    Raises:
        ValueError: negative or non-finite intensities, or exponents not
            positive.
    """
    for name, v in (("lambda0", lambda0), ("gamma0", gamma0)):
        if not np.isfinite(v) or v < 0:
            raise ValueError(f"{name} must be finite and non-negative")
    for name, v in (("delta1", delta1), ("delta2", delta2)):
        if not np.isfinite(v) or v <= 0:
            raise ValueError(f"{name} must be finite and positive")

    def block(values, intensity, exponent):
        out = []
        for v in values:
            if intensity == 0.0:
                out.append(0.0)
            elif abs(v) < _TINY:
                out.append(WEIGHT_CAP)
            else:
                out.append(min(intensity * abs(v) ** (-exponent), WEIGHT_CAP))
        return tuple(out)

    return PenaltyWeights(
        lam=block(theta_tilde.alpha, float(lambda0), float(delta1)),
        gam=block(theta_tilde.beta, float(gamma0), float(delta2)),
        lambda0=float(lambda0),
        gamma0=float(gamma0),
        delta1=float(delta1),
        delta2=float(delta2),
    )


def _as_weight_array(weights, d: int) -> np.ndarray:
    w = weights.w if isinstance(weights, PenaltyWeights) else np.asarray(weights, dtype=float)
    if w.shape != (d,):
        raise ValueError(f"expected {d} weights, got shape {w.shape}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("penalty weights must be finite and non-negative")
    return w


def _as_center(theta_tilde) -> np.ndarray:
    if isinstance(theta_tilde, ParamVector):
        return theta_tilde.theta
    return np.asarray(theta_tilde, dtype=float).copy()


def penalized_objective(hess, theta_tilde, weights, theta) -> float:
    """F(theta); the quadratic term carries no 1/2."""
    hess = np.asarray(hess, dtype=float)
    center = _as_center(theta_tilde)
    theta = np.asarray(theta, dtype=float)
    w = _as_weight_array(weights, center.size)
    dev = theta - center
    return float(dev @ hess @ dev + w @ np.abs(theta))


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def kkt_check(hess, theta_tilde, weights, theta, tol: float = 1e-10):
    """Subgradient optimality certificate for F at theta.

    Active coordinates must satisfy
        |2 [H (theta - theta_tilde)]_j + w_j sign(theta_j)| <= 10 tol H_jj,
    zero coordinates
        |2 [H (theta - theta_tilde)]_j| <= w_j + 10 tol H_jj.

    Returns:
        (ok, worst) where worst is the largest constraint excess, <= 0 when
        the certificate holds.
    """
    hess = np.asarray(hess, dtype=float)
    center = _as_center(theta_tilde)
    theta = np.asarray(theta, dtype=float)
    w = _as_weight_array(weights, center.size)
    g = 2.0 * (hess @ (theta - center))
    slack = 10.0 * tol * np.diag(hess)
    worst = -np.inf
    for j in range(theta.size):
        if theta[j] != 0.0:
            excess = abs(g[j] + w[j] * np.sign(theta[j])) - slack[j]
        else:
            excess = abs(g[j]) - w[j] - slack[j]
        worst = max(worst, float(excess))
    return worst <= 0.0, worst


@dataclass(frozen=True)
class CdInfo:
    """Coordinate-descent diagnostics for one solve."""

    sweeps: int
    converged: bool
    max_sweeps_hit: bool
    kkt_ok: bool
    kkt_worst: float


def _pattern_refine(hess, center, w, theta, tol: float = 1e-10):
    """Active-set polish for a point coordinate descent left short.

    Coordinate descent contracts slowly on ill-conditioned Hessians and can
    stall (or exhaust its sweep budget) with the stationarity residual still
    above the certificate slack. Given the current sign pattern, the
    restricted minimizer solves 2 [H (theta - center)]_A + w_A sign_A = 0
    with the zero block pinned, a plain linear system. The pattern itself is
    then corrected iteratively: a solved coordinate that crossed zero is
    demoted to the zero set, and when the restricted solve is consistent the
    zero coordinate with the worst certificate violation (if any) is
    activated against the sign of its residual. Returns the first candidate
    whose full certificate holds, or None.
    """
    d = center.size
    signs = np.sign(theta)
    for _ in range(3 * d + 3):
        active = np.flatnonzero(signs != 0.0)
        refined = np.zeros(d)
        if active.size:
            zero = np.flatnonzero(signs == 0.0)
            rhs = -0.5 * w[active] * signs[active]
            if zero.size:
                rhs += hess[np.ix_(active, zero)] @ center[zero]
            try:
                hs = hess[np.ix_(active, active)]
                dev_a = np.linalg.solve(hs, rhs)
                # two rounds of iterative refinement: the raw LU residual on
                # an ill-conditioned block can exceed the certificate slack
                # of small-curvature coordinates
                for _ in range(2):
                    dev_a += np.linalg.solve(hs, rhs - hs @ dev_a)
            except np.linalg.LinAlgError:
                return None
            refined[active] = center[active] + dev_a
            flipped = np.sign(refined[active]) != signs[active]
            if np.any(flipped):
                signs[active[flipped]] = 0.0
                continue
        ok, _ = kkt_check(hess, center, w, refined, tol)
        if ok:
            return refined
        resid = 2.0 * (hess @ (refined - center))
        viol = np.maximum(np.abs(resid) - w, 0.0)
        viol[signs != 0.0] = 0.0
        j = int(np.argmax(viol))
        if viol[j] <= 0.0:
            return None
        signs[j] = -np.sign(resid[j])
    return None


def solve_penalized(
    hess,
    theta_tilde,
    weights,
    tol: float = 1e-10,
    max_sweeps: int = 10000,
    debug: bool = False,
):
    """Cyclic coordinate descent for the penalized quadratic.

    Starts at theta_tilde (so all-zero weights return it bitwise) and sweeps
    the coordinates in order until the largest coordinate change in a sweep
    falls below tol and the KKT certificate holds. Hitting max_sweeps
    returns the best point so far, flagged in CdInfo.

    Args:
        hess: symmetric positive definite (d, d) matrix.
        theta_tilde: ParamVector or flat array of length d.
        weights: PenaltyWeights or flat array of non-negative intensities.
        tol: threshold on the max coordinate change per sweep.
        max_sweeps: hard sweep cap.
        debug: assert after every coordinate update that F did not increase.

    Returns:
        (theta_hat, CdInfo) with theta_hat a flat array.

    Raises:
        NotPositiveDefiniteError: a diagonal entry of hess is not positive.
    """
    hess = np.asarray(hess, dtype=float)
    center = _as_center(theta_tilde)
    d = center.size
    if hess.shape != (d, d):
        raise ValueError(f"hessian shape {hess.shape} does not match center size {d}")
    w = _as_weight_array(weights, d)
    diag = np.diag(hess).copy()
    if np.any(diag <= 0.0) or not np.all(np.isfinite(hess)):
        raise NotPositiveDefiniteError("hessian diagonal must be positive and finite")

    theta = center.copy()
    dev = np.zeros(d)
    resid = np.zeros(d)  # H (theta - center), maintained incrementally
    sweeps = 0
    converged = False

    def polish(theta):
        """KKT-certified exit attempt; returns the point to adopt or None.

        The refined point is only adopted when its certificate holds and it
        does not increase the objective, so a failed polish leaves the
        descent state untouched.
        """
        ok, _ = kkt_check(hess, center, w, theta, tol)
        if ok:
            return theta
        refined = _pattern_refine(hess, center, w, theta, tol)
        if refined is not None:
            f_cur = penalized_objective(hess, center, w, theta)
            f_ref = penalized_objective(hess, center, w, refined)
            if f_ref <= f_cur + 1e-12 * (1.0 + abs(f_cur)):
                return refined
        return None

    while sweeps < max_sweeps:
        sweeps += 1
        max_change = 0.0
        for j in range(d):
            off = resid[j] - diag[j] * dev[j]
            c_j = center[j] - off / diag[j]
            if debug:
                f_before = penalized_objective(hess, center, w, theta)
            new = _soft(c_j, w[j] / (2.0 * diag[j]))
            change = new - theta[j]
            if change != 0.0:
                theta[j] = new
                dev[j] += change
                resid += hess[:, j] * change
            if debug:
                f_after = penalized_objective(hess, center, w, theta)
                assert f_after <= f_before + 1e-9 * (1.0 + abs(f_before)), (
                    f"coordinate update increased F at j={j}"
                )
            max_change = max(max_change, abs(change))
        if sweeps % 64 == 0:
            resid = hess @ dev  # refresh against float drift
        # exit attempts: at a stall (sweep changes below tol) and, on badly
        # conditioned problems where the sweep changes shrink slowly but the
        # stationarity gap does not, periodically
        if max_change < tol or sweeps % 256 == 0:
            resid = hess @ dev
            polished = polish(theta)
            if polished is not None:
                theta = polished
                dev = theta - center
                converged = True
                break
            # wrong pattern at the stall: keep sweeping
    if not converged:
        resid = hess @ dev
        polished = polish(theta)
        if polished is not None:
            theta = polished
            dev = theta - center
            converged = True
    resid = hess @ dev
    kkt_ok, kkt_worst = kkt_check(hess, center, w, theta, tol)
    info = CdInfo(
        sweeps=sweeps,
        converged=converged,
        max_sweeps_hit=sweeps >= max_sweeps and not converged,
        kkt_ok=kkt_ok,
        kkt_worst=kkt_worst,
    )
    return theta, info


@dataclass(frozen=True)
class SelectionResult:
    """Penalized estimate, its zero set, and active-set standard errors."""

    model: str
    theta_hat: ParamVector
    zero_set: tuple  # sorted global coordinate indices estimated exactly 0
    active: tuple  # complementary indices
    active_std_err: np.ndarray  # one entry per active coordinate
    weights: PenaltyWeights
    objective: float
    sweeps: int
    kkt_ok: bool
    max_sweeps_hit: bool
    reduced_model: Optional[str]
    n: int
    delta: float


def select(
    model: ModelSpec,
    data: Trajectory,
    fit_result: FitResult,
    lambda0: float,
    gamma0: float,
    delta1: float = 1.0,
    delta2: float = 1.0,
    tol: float = 1e-10,
    max_sweeps: int = 10000,
) -> SelectionResult:
    """Run the adaptive-LASSO selection step on a converged fit.

    Standard errors for the surviving coordinates come from the inverse of
    the active-set submatrix of the contrast Hessian, the empirical version
    of the active-block information matrix. For the CKLS family the zero
    pattern is also mapped to the named nested model it implies.

    Raises:
        ValueError: fit_result did not converge.
        InvalidReductionError: a CKLS selection zeroed the diffusion scale.
    """
    if not fit_result.converged:
        raise ValueError("fit did not converge; selection needs a converged estimate")
    weights = make_weights(fit_result.theta_tilde, lambda0, gamma0, delta1, delta2)
    center = fit_result.theta_tilde.theta
    hess = fit_result.eval.hess
    theta_hat, info = solve_penalized(hess, center, weights, tol=tol, max_sweeps=max_sweeps)
    zero_set = tuple(int(j) for j in range(center.size) if theta_hat[j] == 0.0)
    active = tuple(int(j) for j in range(center.size) if theta_hat[j] != 0.0)
    if active:
        sub = hess[np.ix_(active, active)]
        active_std_err = np.sqrt(np.diag(np.linalg.inv(sub)))
    else:
        active_std_err = np.empty(0)
    reduced = None
    if model.name == "ckls":
        reduced = ckls_reduce(theta_hat, zero_set)
    return SelectionResult(
        model=model.name,
        theta_hat=ParamVector.from_theta(theta_hat, model.p, model.q),
        zero_set=zero_set,
        active=active,
        active_std_err=active_std_err,
        weights=weights,
        objective=penalized_objective(hess, center, weights, theta_hat),
        sweeps=info.sweeps,
        kkt_ok=info.kkt_ok,
        max_sweeps_hit=info.max_sweeps_hit,
        reduced_model=reduced,
        n=data.n,
        delta=data.delta,
    )
