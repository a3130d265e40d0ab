"""Convergence sweeps on the curved families, one CSV per (family, type)."""

import argparse
import sys

from curvtrefftz.cli import main

RUNS = [("pegboard", 2), ("jigsaw", 2), ("shuriken", 2), ("shuriken", 1)]

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", default="4..64")
    ap.add_argument("--n-per-edge", default="96")
    ap.add_argument("--outdir", default=".")
    a = ap.parse_args()
    worst = 0
    for family, t in RUNS:
        out = f"{a.outdir}/{family}_type{t}.csv"
        code = main(["solve", "--family", family, "--type", str(t), "--r", a.r,
                     "--n-per-edge", a.n_per_edge, "--csv", out])
        print(f"{family} Type {t}: {out} (exit {code})")
        worst = max(worst, code)
    sys.exit(worst)
