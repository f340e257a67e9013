#!/usr/bin/env python3
"""Download the U.S. monthly short-term interest rate series used in the
real-data example and write it to data/irates.csv.

The series is the r1 column (1-month rate, percent per annum) of the Irates
dataset from the R package Ecdat: 307 monthly observations, June 1964 to
December 1989. It is fetched from the Rdatasets CSV mirror. The output is a
single-column CSV (header "x"); the observation step is 1/12 year, passed
explicitly when loading (for example `sdelasso fit --model ckls
--data data/irates.csv --format single-column --delta 0.08333333333333333`).

Usage: python3 scripts/fetch_irates.py [--out data/irates.csv]
"""

from __future__ import annotations

import argparse
import csv
import io
import pathlib
import sys
import urllib.request

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/Ecdat/Irates.csv"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--out",
        default="data/irates.csv",
        help="output path (default data/irates.csv)",
    )
    args = parser.parse_args(argv)

    try:
        with urllib.request.urlopen(URL, timeout=60) as resp:
            raw = resp.read().decode("utf-8")
    except OSError as exc:
        print(f"download failed: {exc}", file=sys.stderr)
        print(
            "fetch the file manually and extract the r1 column into a "
            "single-column CSV with header 'x'",
            file=sys.stderr,
        )
        return 1

    reader = csv.DictReader(io.StringIO(raw))
    if reader.fieldnames is None or "r1" not in reader.fieldnames:
        print(f"unexpected columns: {reader.fieldnames}", file=sys.stderr)
        return 1
    rates = [float(row["r1"]) for row in reader]
    if len(rates) != 307:
        print(f"warning: expected 307 observations, got {len(rates)}", file=sys.stderr)

    out = pathlib.Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x"])
        for r in rates:
            writer.writerow([f"{r:.17g}"])
    print(f"wrote {len(rates)} observations to {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
