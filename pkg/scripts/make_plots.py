"""SVG convergence plots from the CSVs written by the other scripts."""

import argparse
import os
import sys

from curvtrefftz.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--indir", default=".")
    a = ap.parse_args()
    d = a.indir
    code = 0
    if os.path.exists(f"{d}/lshape.csv"):
        code |= main(["plot", "--csv", f"{d}/lshape.csv", "--label", "lshape", "--out", f"{d}/lshape.svg"])
    fams = [f for f in ("pegboard_type2", "jigsaw_type2", "shuriken_type2", "shuriken_type1")
            if os.path.exists(f"{d}/{f}.csv")]
    if fams:
        styles = ["dashed" if f.endswith("type1") else "solid" for f in fams]
        code |= main(["plot", "--csv", *[f"{d}/{f}.csv" for f in fams], "--label",
                      *[f.replace("_type", " Type ") for f in fams], "--style", *styles,
                      "--out", f"{d}/families.svg"])
    sys.exit(code)
