#!/usr/bin/env python3
"""Cluster the trimmed Wine table across sampling rates.

Point --wine-csv at the UCI `wine.data` file (or set FUSECLUSTER_DATA_DIR).
"""

import argparse
import sys

from fusecluster.cli import main

if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--wine-csv", default=None)
    parser.add_argument("--out-dir", default="results/wine")
    args = parser.parse_args()

    argv = ["wine", "--out-dir", args.out_dir]
    if args.wine_csv:
        argv += ["--wine-csv", args.wine_csv]
    sys.exit(main(argv))
