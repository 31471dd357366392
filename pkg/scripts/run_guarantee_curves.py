#!/usr/bin/env python3
"""Emit the guarantee-bound curves (success lower bound vs sampling rate)."""

import sys

from fusecluster.cli import main

if __name__ == "__main__":
    out_dir = sys.argv[1] if len(sys.argv) > 1 else "results/theory"
    raise SystemExit(main(["theory", "--preset", "fig2", "--out-dir", out_dir]))
