"""Command-line front end.

Subcommands: simulate, fit, select, mc, reduce. Exit codes: 0 success,
1 usage error, 2 data/parse error, 3 numerical failure; diagnostics go to
standard error. Every subcommand is deterministic in its inputs: the same
argv and the same input files produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .alasso import select
from .dataio import (
    DataSource,
    fit_to_dict,
    load_config,
    load_csv,
    selection_to_dict,
    write_estimates_csv,
    write_fit_json,
    write_kde_csv,
    write_mc_json,
    write_select_json,
    write_trajectory,
)
from .errors import (
    AllFailedError,
    DegenerateSampleError,
    DomainError,
    GridError,
    InvalidReductionError,
    NonFiniteError,
    NotPositiveDefiniteError,
    ParseError,
)
from .models import ParamVector, ckls_reduce, get_model, model_names
from .montecarlo import McConfig, run_mc, summarize
from .qmle import fit
from .simulate import SimConfig, simulate

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    """Command-line arguments are inconsistent beyond what argparse checks."""


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _theta_for(model, text: str) -> ParamVector:
    try:
        vals = [float(tok) for tok in text.split(",")]
    except ValueError:
        raise UsageError(f"cannot parse parameter list {text!r}")
    if len(vals) != model.p + model.q:
        raise UsageError(
            f"model {model.name} takes {model.p + model.q} parameters "
            f"({', '.join(model.labels)}), got {len(vals)}"
        )
    return ParamVector.from_theta(np.array(vals), model.p, model.q)


def _sniff_format(path: str, header: bool) -> str:
    """Count columns in the first data line: 1 -> single-column, 2 -> two-column."""
    skip = 1 if header else 0
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f):
            line = raw.strip()
            if not line or lineno < skip:
                continue
            return "two-column" if line.count(",") >= 1 else "single-column"
    raise ParseError("no data rows found")


def _load_data(args) -> "Trajectory":
    fmt = args.format
    header = not args.no_header
    if fmt == "auto":
        fmt = _sniff_format(args.data, header)
    if fmt == "single-column" and args.delta is None:
        raise UsageError("--delta is required for single-column data")
    src = DataSource(path=args.data, format=fmt, delta=args.delta, header=header)
    return load_csv(src)


def _cmd_simulate(args) -> int:
    model = get_model(args.model)
    theta = _theta_for(model, args.theta)
    cfg = SimConfig(
        n=args.n,
        delta=args.delta,
        x0=args.x0,
        seed=args.seed,
        refine=args.refine,
        scheme=args.scheme,
    )
    traj = simulate(model, theta, cfg)
    write_trajectory(args.out, traj)
    return EXIT_OK


def _cmd_fit(args) -> int:
    model = get_model(args.model)
    traj = _load_data(args)
    init = _theta_for(model, args.init) if args.init else None
    fr = fit(model, traj, init=init)
    if not fr.converged:
        print(
            f"fit did not converge (best value {fr.value:.6g}); no report written",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    if args.out:
        write_fit_json(args.out, fr)
    else:
        json.dump({"schema_version": "1", **fit_to_dict(fr)}, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


def _cmd_select(args) -> int:
    model = get_model(args.model)
    traj = _load_data(args)
    init = _theta_for(model, args.init) if args.init else None
    fr = fit(model, traj, init=init)
    if not fr.converged:
        print(
            f"fit did not converge (best value {fr.value:.6g}); no report written",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    sr = select(
        model,
        traj,
        fr,
        args.lambda0,
        args.gamma0,
        delta1=args.delta1,
        delta2=args.delta2,
    )
    if args.out:
        write_select_json(args.out, fr, sr)
    else:
        doc = {
            "schema_version": "1",
            "fit": fit_to_dict(fr),
            "selection": selection_to_dict(sr),
        }
        json.dump(doc, sys.stdout, indent=2, sort_keys=True)
        print()
    return EXIT_OK


_MC_DEFAULTS = {
    "lambda0": "1",
    "gamma0": "1",
    "delta1": "1",
    "delta2": "1",
    "refine": "10",
    "scheme": "milstein2",
    "workers": "1",
    "x0": "1.0",
}


def _mc_config(raw: dict) -> tuple:
    merged = dict(_MC_DEFAULTS)
    merged.update(raw)
    if "seed" in merged and "master_seed" not in merged:
        merged["master_seed"] = merged.pop("seed")
    required = ("model", "theta_true", "n", "delta", "reps", "master_seed")
    missing = [k for k in required if k not in merged]
    if missing:
        raise ParseError(f"config is missing required keys: {', '.join(missing)}")
    model = get_model(merged["model"])
    try:
        theta = ParamVector.from_theta(
            np.array([float(v) for v in merged["theta_true"].split(",")]),
            model.p,
            model.q,
        )
        cfg = McConfig(
            model=model.name,
            theta_true=theta,
            n=int(merged["n"]),
            delta=float(merged["delta"]),
            x0=float(merged["x0"]),
            reps=int(merged["reps"]),
            master_seed=int(merged["master_seed"]),
            lambda0=float(merged["lambda0"]),
            gamma0=float(merged["gamma0"]),
            delta1=float(merged["delta1"]),
            delta2=float(merged["delta2"]),
            refine=int(merged["refine"]),
            scheme=merged["scheme"],
            workers=int(merged["workers"]),
        )
    except ValueError as exc:
        raise ParseError(f"bad config value: {exc}")
    return cfg, merged.get("out_dir")


def _cmd_mc(args) -> int:
    cfg, cfg_out_dir = _mc_config(load_config(args.config))
    out_dir = args.out_dir or cfg_out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    result = run_mc(cfg, workers=args.workers)
    summary = summarize(result)
    labels = get_model(cfg.model).labels
    write_estimates_csv(os.path.join(out_dir, "estimates.csv"), result)
    write_kde_csv(os.path.join(out_dir, "kde.csv"), summary, labels)
    write_mc_json(os.path.join(out_dir, "summary.json"), summary, labels)
    from .plots import render_density_panels

    render_density_panels(
        os.path.join(out_dir, "densities.png"),
        summary,
        labels,
        truth=cfg.theta_true.theta,
    )
    print(
        f"{summary.reps - summary.failures}/{summary.reps} replications succeeded; "
        f"reports in {out_dir}"
    )
    return EXIT_OK


def _cmd_reduce(args) -> int:
    with open(args.result, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{args.result}: {exc}")
    sel = doc.get("selection", doc)
    reduced = sel.get("reduced_model")
    if reduced is None:
        if sel.get("model") == "ckls" and "theta_hat" in sel and "zero_set" in sel:
            reduced = ckls_reduce(np.array(sel["theta_hat"]), sel["zero_set"])
        else:
            raise ParseError(
                "result carries no reduction (only ckls selections reduce)"
            )
    print(reduced)
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="sdelasso", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    names = model_names()

    p_sim = sub.add_parser("simulate", help="simulate a trajectory to CSV")
    p_sim.add_argument("--model", required=True, choices=names)
    p_sim.add_argument("--theta", required=True, help="comma-separated parameters")
    p_sim.add_argument("--n", required=True, type=int)
    p_sim.add_argument("--delta", required=True, type=float)
    p_sim.add_argument("--x0", type=float, default=1.0)
    p_sim.add_argument("--refine", type=int, default=10)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--scheme", choices=("euler", "milstein2"), default="milstein2")
    p_sim.add_argument("--out", required=True)
    p_sim.set_defaults(func=_cmd_simulate)

    def add_data_flags(p):
        p.add_argument("--data", required=True)
        p.add_argument("--delta", type=float, default=None)
        p.add_argument(
            "--format",
            choices=("auto", "two-column", "single-column"),
            default="auto",
        )
        p.add_argument("--no-header", action="store_true")
        p.add_argument("--init", default=None, help="comma-separated starting point")

    p_fit = sub.add_parser("fit", help="quasi-likelihood fit to JSON")
    p_fit.add_argument("--model", required=True, choices=names)
    add_data_flags(p_fit)
    p_fit.add_argument("--out", default=None)
    p_fit.set_defaults(func=_cmd_fit)

    p_sel = sub.add_parser("select", help="fit plus adaptive-LASSO selection")
    p_sel.add_argument("--model", required=True, choices=names)
    add_data_flags(p_sel)
    p_sel.add_argument("--lambda0", type=float, default=1.0)
    p_sel.add_argument("--gamma0", type=float, default=1.0)
    p_sel.add_argument("--delta1", type=float, default=1.0)
    p_sel.add_argument("--delta2", type=float, default=1.0)
    p_sel.add_argument("--out", default=None)
    p_sel.set_defaults(func=_cmd_select)

    p_mc = sub.add_parser("mc", help="Monte Carlo study from a config file")
    p_mc.add_argument("--config", required=True)
    p_mc.add_argument("--out-dir", default=None)
    p_mc.add_argument("--workers", type=int, default=None)
    p_mc.set_defaults(func=_cmd_mc)

    p_red = sub.add_parser("reduce", help="print the named model a selection implies")
    p_red.add_argument("--result", required=True, help="selection JSON file")
    p_red.set_defaults(func=_cmd_reduce)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, GridError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (OSError, UnicodeDecodeError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (
        DomainError,
        NonFiniteError,
        NotPositiveDefiniteError,
        InvalidReductionError,
        AllFailedError,
        DegenerateSampleError,
    ) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
