"""L-shape sweep with enrichment and condition numbers, checked against the golden table."""

import argparse
import sys

from curvtrefftz.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--r", default="1..16")
    ap.add_argument("--out", default="lshape.csv")
    ap.add_argument("--rescale", action="store_true", help="diagonally rescaled kappa")
    a = ap.parse_args()
    argv = ["solve", "--family", "lshape", "--enrich", "--kappa", "--r", a.r, "--csv", a.out]
    if a.rescale:
        argv.append("--rescale")
    sys.exit(main(argv))
