"""Monte Carlo replication of the simulate / fit / select pipeline.

Each replication simulates a fresh path from the true parameter, fits the
quasi-likelihood estimate, and runs the adaptive-LASSO selection.
Replication r draws its path from a dedicated stream derived from
(master_seed, r), so results are bitwise identical regardless of how many
worker processes run them. Failed replications (domain blowups,
non-converged fits) are recorded and skipped, never fatal, unless every
single one fails.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alasso import select
from .errors import AllFailedError, DegenerateSampleError, SdeLassoError
from .models import ParamVector, get_model
from .qmle import fit
from .simulate import SimConfig, simulate

__all__ = [
    "McConfig",
    "RepRecord",
    "McResult",
    "McSummary",
    "rep_seed",
    "run_mc",
    "kde",
    "summarize",
]


@dataclass(frozen=True)
class McConfig:
    """One Monte Carlo experiment: model, truth, sampling grid, penalties."""

    model: str
    theta_true: ParamVector
    n: int
    delta: float
    x0: float
    reps: int
    master_seed: int
    lambda0: float
    gamma0: float
    delta1: float = 1.0
    delta2: float = 1.0
    refine: int = 10
    scheme: str = "milstein2"
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must fit in 64 bits")


@dataclass(frozen=True)
class RepRecord:
    """Outcome of one successful replication."""

    rep: int
    theta_tilde: np.ndarray
    theta_hat: np.ndarray
    zero_set: tuple
    std_err: np.ndarray
    active_std_err: np.ndarray
    kkt_ok: bool
    converged: bool
    reduced_model: Optional[str]


@dataclass(frozen=True)
class McResult:
    """All replication records plus the failures that were skipped."""

    config: McConfig
    records: tuple  # RepRecord, successful reps in rep order
    failures: tuple  # (rep, message) pairs

    @property
    def theta_tilde(self) -> np.ndarray:
        return np.array([r.theta_tilde for r in self.records])

    @property
    def theta_hat(self) -> np.ndarray:
        return np.array([r.theta_hat for r in self.records])

    def zero_fraction(self, j: int) -> float:
        return float(np.mean([j in r.zero_set for r in self.records]))


@dataclass(frozen=True)
class McSummary:
    """Per-parameter statistics of the penalized estimates.

    mean/median/std are over all successful replications, exact zeros
    included. The density estimates exclude the zeros, which selection
    produces as genuine atoms; their mass is reported separately in
    zero_fraction, and point_mass marks coordinates whose nonzero part was
    too thin or too concentrated for a density.
    """

    reps: int
    failures: int
    estimates: np.ndarray  # (reps - failures, p + q)
    rep_ids: tuple
    mean: np.ndarray
    median: np.ndarray
    std: np.ndarray
    zero_fraction: np.ndarray
    kde_grids: tuple  # per parameter: (grid, density) or None
    point_mass: tuple  # per parameter: True when no density was estimable


def rep_seed(master_seed: int, rep: int) -> int:
    """Deterministic per-replication seed, independent of worker layout."""
    ss = np.random.SeedSequence((int(master_seed), int(rep)))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _run_rep(cfg: McConfig, rep: int):
    """One replication; module level so it pickles for process pools."""
    model = get_model(cfg.model)
    sim_cfg = SimConfig(
        n=cfg.n,
        delta=cfg.delta,
        x0=cfg.x0,
        seed=rep_seed(cfg.master_seed, rep),
        refine=cfg.refine,
        scheme=cfg.scheme,
    )
    try:
        traj = simulate(model, cfg.theta_true, sim_cfg)
        fit_res = fit(model, traj)
        if not fit_res.converged:
            return rep, None, "fit did not converge"
        sel = select(
            model,
            traj,
            fit_res,
            cfg.lambda0,
            cfg.gamma0,
            delta1=cfg.delta1,
            delta2=cfg.delta2,
        )
    except SdeLassoError as exc:
        return rep, None, f"{type(exc).__name__}: {exc}"
    rec = RepRecord(
        rep=rep,
        theta_tilde=fit_res.theta_tilde.theta,
        theta_hat=sel.theta_hat.theta,
        zero_set=sel.zero_set,
        std_err=fit_res.std_err,
        active_std_err=sel.active_std_err,
        kkt_ok=sel.kkt_ok,
        converged=fit_res.converged,
        reduced_model=sel.reduced_model,
    )
    return rep, rec, None


def run_mc(cfg: McConfig, workers: Optional[int] = None) -> McResult:
    """Run the full experiment.

    Args:
        cfg: experiment description.
        workers: process count; defaults to cfg.workers. The environment
            variable SDE_LASSO_WORKERS overrides both.

    Raises:
        AllFailedError: every replication failed.
    """
    if workers is None:
        workers = cfg.workers
    env = os.environ.get("SDE_LASSO_WORKERS")
    if env is not None:
        workers = int(env)
    if workers < 1:
        raise ValueError("workers must be at least 1")

    get_model(cfg.model)  # fail fast on unknown names
    if workers == 1:
        outcomes = [_run_rep(cfg, r) for r in range(cfg.reps)]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_rep, [cfg] * cfg.reps, range(cfg.reps)))

    records = []
    failures = []
    for rep, rec, err in sorted(outcomes, key=lambda o: o[0]):
        if rec is None:
            failures.append((rep, err))
        else:
            records.append(rec)
    if not records:
        raise AllFailedError(
            f"all {cfg.reps} replications failed; first: {failures[0][1]}"
        )
    return McResult(config=cfg, records=tuple(records), failures=tuple(failures))


def kde(sample, bandwidth: Optional[float] = None, grid_size: int = 512):
    """Gaussian kernel density estimate.

    The default bandwidth is Silverman's 0.9 min(std, IQR/1.34) m^(-1/5);
    the grid spans [min - 3h, max + 3h] with grid_size points.

    Returns:
        (grid, density) arrays.

    Raises:
        DegenerateSampleError: fewer than 2 points, or no spread.
    """
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise DegenerateSampleError("need at least 2 points for a density estimate")
    if not np.all(np.isfinite(x)):
        raise ValueError("sample must be finite")
    if bandwidth is None:
        std = float(np.std(x, ddof=1))
        q75, q25 = np.percentile(x, [75.0, 25.0])
        iqr = float(q75 - q25)
        scale = min(std, iqr / 1.34) if iqr > 0.0 else std
        # relative floor: a bitwise-constant sample can show std ~ 1e-16 from
        # rounding in the mean, which is no spread for density purposes
        floor = 1e-13 * max(1.0, float(np.max(np.abs(x))))
        if scale <= floor or not np.isfinite(scale):
            raise DegenerateSampleError("sample has no spread")
        h = 0.9 * scale * x.size ** (-0.2)
    else:
        h = float(bandwidth)
        if h <= 0.0 or not np.isfinite(h):
            raise ValueError("bandwidth must be positive")
    grid = np.linspace(x.min() - 3.0 * h, x.max() + 3.0 * h, grid_size)
    z = (grid[:, None] - x[None, :]) / h
    dens = np.exp(-0.5 * z * z).sum(axis=1) / (x.size * h * np.sqrt(2.0 * np.pi))
    return grid, dens


def summarize(result: McResult) -> McSummary:
    """Aggregate a Monte Carlo run into per-parameter summaries."""
    est = result.theta_hat
    reps = result.config.reps
    d = est.shape[1]
    grids = []
    point_mass = []
    for j in range(d):
        nonzero = est[:, j][est[:, j] != 0.0]
        try:
            grids.append(kde(nonzero))
            point_mass.append(False)
        except DegenerateSampleError:
            grids.append(None)
            point_mass.append(True)
    return McSummary(
        reps=reps,
        failures=len(result.failures),
        estimates=est,
        rep_ids=tuple(r.rep for r in result.records),
        mean=np.mean(est, axis=0),
        median=np.median(est, axis=0),
        std=np.std(est, axis=0, ddof=1) if est.shape[0] > 1 else np.full(d, np.nan),
        zero_fraction=np.mean(est == 0.0, axis=0),
        kde_grids=tuple(grids),
        point_mass=tuple(point_mass),
    )
