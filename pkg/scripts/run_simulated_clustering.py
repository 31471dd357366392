#!/usr/bin/env python3
"""Cluster the two three-cluster Gaussian datasets across sampling rates and
emit per-run labels, centroids, traces, and 2-component projections."""

import argparse
import sys

from fusecluster.cli import main

P0_GRID = (1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2)

if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--out-dir", default="results/simulated")
    args = parser.parse_args()

    code = 0
    for preset in ("fig4-dataset1", "fig4-dataset2"):
        for p0 in P0_GRID:
            out = f"{args.out_dir}/{preset}/p0_{p0:g}"
            code = max(
                code,
                main(["simulate", "--preset", preset, "--p0", str(p0), "--out-dir", out]),
            )
    sys.exit(code)
