"""Interpolation-error study for a harmonic test function on the pegboard family."""

import argparse
import sys

from curvtrefftz.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--family", default="pegboard")
    ap.add_argument("--r", default="4..32")
    ap.add_argument("--p", default="1")
    ap.add_argument("--test", default="rez3")
    ap.add_argument("--out", default="interp.csv")
    a = ap.parse_args()
    sys.exit(main(["interp", "--family", a.family, "--r", a.r, "--p", a.p, "--test", a.test,
                   "--csv", a.out]))
