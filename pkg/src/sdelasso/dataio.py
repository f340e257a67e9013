"""CSV ingestion and CSV/JSON report emission.

Trajectories are written as two-column `t,x` files with 17 significant
digits, enough for a bit-exact float round trip through load_csv. Reports
are flat JSON objects carrying a schema_version field. Estimate tables and
density grids go to CSV, one row per replication and one row per grid point.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .alasso import SelectionResult
from .errors import GridError, ParseError
from .montecarlo import McResult, McSummary
from .qmle import FitResult
from .simulate import Trajectory

__all__ = [
    "SCHEMA_VERSION",
    "DataSource",
    "load_csv",
    "load_config",
    "write_trajectory",
    "write_estimates_csv",
    "write_kde_csv",
    "fit_to_dict",
    "selection_to_dict",
    "write_fit_json",
    "write_select_json",
    "write_mc_json",
]

SCHEMA_VERSION = "1"
_FMT = "%.17g"
_GRID_RTOL = 1e-6


@dataclass(frozen=True)
class DataSource:
    """Where and how to read an observed series.

    format is "two-column" (t,x rows; delta optional and validated against
    the t spacing) or "single-column" (x only; delta required). Dates are
    never parsed; the caller supplies the spacing.
    """

    path: str
    format: str = "two-column"
    delta: Optional[float] = None
    header: bool = True

    def __post_init__(self):
        if self.format not in ("two-column", "single-column"):
            raise ValueError('format must be "two-column" or "single-column"')
        if self.delta is not None and not (
            float(self.delta) > 0.0 and np.isfinite(self.delta)
        ):
            raise ValueError("delta must be positive and finite")


def _parse_field(text: str, lineno: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: cannot parse {text!r} as a number", line=lineno)
    if not np.isfinite(v):
        raise ParseError(f"line {lineno}: non-finite value {text!r}", line=lineno)
    return v


def load_csv(src: DataSource) -> Trajectory:
    """Read an observed series into a Trajectory.

    Raises:
        ParseError: malformed or non-finite fields, wrong column count,
            fewer than 3 observations (line number attached when known).
        GridError: two-column time spacing deviates from delta by more than
            1e-6 delta (1-based data row of the first bad spacing attached).
        ValueError: single-column input without a declared delta.
    """
    if src.format == "single-column" and src.delta is None:
        raise ValueError("single-column input requires an explicit delta")
    want = 2 if src.format == "two-column" else 1
    times = []
    values = []
    with open(src.path, "r", encoding="utf-8", newline="") as f:
        first_data_line = 2 if src.header else 1
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if lineno < first_data_line or not line:
                continue
            fields = [p.strip() for p in line.split(",")]
            if len(fields) != want:
                raise ParseError(
                    f"line {lineno}: expected {want} column(s), got {len(fields)}",
                    line=lineno,
                )
            if want == 2:
                times.append(_parse_field(fields[0], lineno))
                values.append(_parse_field(fields[1], lineno))
            else:
                values.append(_parse_field(fields[0], lineno))
    if len(values) < 3:
        raise ParseError(f"need at least 3 observations, got {len(values)}")

    x = np.array(values, dtype=float)
    if src.format == "single-column":
        delta = float(src.delta)
        t = np.arange(x.size) * delta
        return Trajectory(t=t, x=x, delta=delta)

    t = np.array(times, dtype=float)
    delta = float(src.delta) if src.delta is not None else float(t[1] - t[0])
    if not (delta > 0.0 and np.isfinite(delta)):
        raise GridError("time column is not increasing at row 2", row=2)
    spacing = np.diff(t)
    bad = np.abs(spacing - delta) > _GRID_RTOL * delta
    if np.any(bad):
        row = int(np.argmax(bad)) + 2  # 1-based data row that breaks the grid
        raise GridError(
            f"time spacing at data row {row} deviates from delta={delta:g} "
            f"by more than {_GRID_RTOL:g} delta",
            row=row,
        )
    return Trajectory(t=t, x=x, delta=delta)


def write_trajectory(path, traj: Trajectory) -> None:
    """Write `t,x` rows with 17 significant digits (bit-exact round trip)."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("t,x\n")
        for t_i, x_i in zip(traj.t, traj.x):
            f.write(f"{_FMT % t_i},{_FMT % x_i}\n")


def load_config(path) -> dict:
    """Parse a flat `key = value` config file with `#` comments.

    Returns the raw string values keyed by name; typing is the caller's
    concern.

    Raises:
        ParseError: a non-comment line has no `=` (line number attached).
    """
    out = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(
                    f"line {lineno}: expected `key = value`, got {raw.strip()!r}",
                    line=lineno,
                )
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_estimates_csv(path, result: McResult) -> None:
    """One row per successful replication: rep, theta_1.., converged."""
    d = result.theta_hat.shape[1] if result.records else 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["rep"] + [f"theta_{j + 1}" for j in range(d)] + ["converged"])
        for rec in result.records:
            writer.writerow(
                [rec.rep]
                + [_FMT % v for v in rec.theta_hat]
                + ["true" if rec.converged else "false"]
            )


def write_kde_csv(path, summary: McSummary, labels) -> None:
    """Density grids as `param,grid,density` rows, point-mass params skipped."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["param", "grid", "density"])
        for label, pair in zip(labels, summary.kde_grids):
            if pair is None:
                continue
            grid, dens = pair
            for g, v in zip(grid, dens):
                writer.writerow([label, _FMT % g, _FMT % v])


def fit_to_dict(fr: FitResult) -> dict:
    return {
        "model": fr.model,
        "theta_tilde": [float(v) for v in fr.theta_tilde.theta],
        "std_err": [float(v) for v in fr.std_err],
        "value": float(fr.value),
        "converged": bool(fr.converged),
        "hess_repaired": bool(fr.eval.hess_repaired),
        "n": int(fr.n),
        "delta": float(fr.delta),
    }


def selection_to_dict(sr: SelectionResult) -> dict:
    return {
        "model": sr.model,
        "theta_hat": [float(v) for v in sr.theta_hat.theta],
        "zero_set": [int(j) for j in sr.zero_set],
        "active_std_err": [float(v) for v in sr.active_std_err],
        "lambda0": sr.weights.lambda0,
        "gamma0": sr.weights.gamma0,
        "delta1": sr.weights.delta1,
        "delta2": sr.weights.delta2,
        "objective": float(sr.objective),
        "sweeps": int(sr.sweeps),
        "kkt_ok": bool(sr.kkt_ok),
        "reduced_model": sr.reduced_model,
        "n": int(sr.n),
        "delta": float(sr.delta),
    }


def _dump(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def write_fit_json(path, fr: FitResult) -> None:
    _dump(path, {"schema_version": SCHEMA_VERSION, **fit_to_dict(fr)})


def write_select_json(path, fr: FitResult, sr: SelectionResult) -> None:
    _dump(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "fit": fit_to_dict(fr),
            "selection": selection_to_dict(sr),
        },
    )


def write_mc_json(path, summary: McSummary, labels) -> None:
    _dump(
        path,
        {
            "schema_version": SCHEMA_VERSION,
            "reps": summary.reps,
            "failures": summary.failures,
            "labels": list(labels),
            "mean": [float(v) for v in summary.mean],
            "median": [float(v) for v in summary.median],
            "std": [None if not np.isfinite(v) else float(v) for v in summary.std],
            "zero_fraction": [float(v) for v in summary.zero_fraction],
            "point_mass": list(summary.point_mass),
        },
    )
