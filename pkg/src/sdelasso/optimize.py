"""Quasi-Newton minimizer with backtracking line search and box projection.

BFGS on the inverse Hessian approximation, Armijo backtracking, optional
per-coordinate box constraints handled by gradient projection, and a
relative stopping rule ||pg||_inf <= grad_tol * (1 + |f|) on the projected
gradient (which reduces to the plain gradient without bounds). Objective
evaluations may signal an inadmissible point by returning a value >= BIG;
the line search then simply backtracks. Accepted iterates never increase
the objective and never leave the box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["BIG", "OptResult", "minimize_bfgs"]

BIG = 1e12
_ARMIJO = 1e-4


@dataclass(frozen=True)
class OptResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    converged: bool
    history: tuple  # accepted objective values, starting with f(x0)


def _box_arrays(bounds, d):
    lo = np.full(d, -np.inf)
    hi = np.full(d, np.inf)
    if bounds is not None:
        for j, b in enumerate(bounds):
            if b is None:
                continue
            if b[0] is not None:
                lo[j] = float(b[0])
            if b[1] is not None:
                hi[j] = float(b[1])
    return lo, hi


def _proj_grad(x, g, lo, hi):
    """Gradient with components clamped where a bound blocks descent.

    At a lower bound only an inward (positive) move is feasible, so a
    positive gradient there satisfies the first-order condition and is
    zeroed; symmetrically at an upper bound.
    """
    pg = g.copy()
    at_lo = x <= lo
    at_hi = x >= hi
    pg[at_lo] = np.minimum(pg[at_lo], 0.0)
    pg[at_hi] = np.maximum(pg[at_hi], 0.0)
    return pg


def minimize_bfgs(fun_grad, x0, grad_tol=1e-6, step_tol=1e-10, max_iter=500,
                  max_step=None, bounds=None) -> OptResult:
    """Minimize fun_grad(x) -> (f, g) starting from x0.

    Stops when the relative projected-gradient criterion holds
    (converged=True), when no step of infinity-norm >= step_tol makes
    progress, or at max_iter. converged reports the criterion at the
    returned point.

    max_step, when given, caps the infinity norm of every accepted step.
    Objectives with several descent basins reward this: an uncapped first
    iteration moves along -grad with whatever magnitude the gradient has,
    which can hop over a ridge into a remote basin that backtracking alone
    never rejects (any decrease is accepted). The cap keeps iterates in the
    basin of the starting point unless the surface genuinely drains away.

    bounds, when given, is a sequence of (lo, hi) pairs (entries or sides
    may be None); iterates are projected onto the box and convergence at an
    active bound only requires the inward gradient component to vanish.
    """
    x = np.asarray(x0, dtype=float).copy()
    d = x.size
    lo, hi = _box_arrays(bounds, d)
    x = np.minimum(np.maximum(x, lo), hi)
    f, g = fun_grad(x)
    g = np.asarray(g, dtype=float)
    history = [float(f)]
    if not np.isfinite(f) or f >= BIG:
        return OptResult(x, float(f), g, 0, False, tuple(history))

    eye = np.eye(d)
    h_inv = eye.copy()
    first_update = True
    prev_active = (x <= lo) | (x >= hi)
    iterations = 0

    def done(fv, gv):
        return float(np.max(np.abs(_proj_grad(x, gv, lo, hi)))) <= grad_tol * (1.0 + abs(fv))

    while iterations < max_iter and not done(f, g):
        iterations += 1
        pg = _proj_grad(x, g, lo, hi)
        blocked = ((x <= lo) & (g > 0.0)) | ((x >= hi) & (g < 0.0))
        p = -(h_inv @ g)
        p[blocked] = 0.0
        slope = float(g @ p)
        if not np.isfinite(slope) or slope >= 0.0:
            h_inv = eye.copy()
            first_update = True
            p = -pg
            slope = float(g @ p)
            if slope == 0.0:
                break
        # backtracking Armijo search along the projected path
        p_norm = float(np.max(np.abs(p)))
        if p_norm == 0.0:
            break
        t = 1.0
        if max_step is not None and p_norm > max_step:
            t = max_step / p_norm
        accepted = False
        while t * p_norm >= step_tol:
            x_new = np.minimum(np.maximum(x + t * p, lo), hi)
            s = x_new - x
            decrease = float(g @ s)
            if decrease < 0.0:
                f_new, g_new = fun_grad(x_new)
                if np.isfinite(f_new) and f_new <= f + _ARMIJO * decrease:
                    accepted = True
                    break
            t *= 0.5
        if not accepted:
            break
        y = np.asarray(g_new, dtype=float) - g
        active = (x_new <= lo) | (x_new >= hi)
        if bool(np.any(active != prev_active)):
            # curvature gathered on a different face is stale
            h_inv = eye.copy()
            first_update = True
        else:
            ys = float(y @ s)
            if ys > 1e-10 * float(np.linalg.norm(y)) * float(np.linalg.norm(s)):
                if first_update:
                    h_inv = (ys / float(y @ y)) * eye
                    first_update = False
                rho = 1.0 / ys
                v = eye - rho * np.outer(s, y)
                h_inv = v @ h_inv @ v.T + rho * np.outer(s, s)
        prev_active = active
        x, f, g = x_new, float(f_new), np.asarray(g_new, dtype=float)
        history.append(f)
        if float(np.max(np.abs(s))) < step_tol:
            break

    return OptResult(x, float(f), g, iterations, done(f, g), tuple(history))
