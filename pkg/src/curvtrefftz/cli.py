"""Command-line driver: meshes, convergence sweeps, edge bases, interpolation
studies and plots.

Heavy modules are imported inside the commands so that the thread-count
environment variable can be applied before numpy loads its BLAS.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys

log = logging.getLogger("curvtrefftz")

THREADS_ENV = "CURVTREFFTZ_THREADS"
CSV_COLUMNS = ("r", "dofs", "error", "ratio", "kappa_global", "kappa_block", "wall_ms")


def _apply_threads():
    n = os.environ.get(THREADS_ENV)
    if n:
        if not n.isdigit() or int(n) < 1:
            raise SystemExit(f"{THREADS_ENV} must be a positive integer, got {n!r}")
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, n)


def parse_r_list(spec: str) -> tuple:
    """``"1..16"`` doubles from 1 to 16; ``"4,8,16"`` is taken literally."""
    spec = spec.strip()
    if ".." in spec:
        a, b = spec.split("..")
        a, b = int(a), int(b)
        if a < 1 or b < a:
            raise ValueError(f"bad r range {spec!r}")
        out = []
        r = a
        while r <= b:
            out.append(r)
            r *= 2
        return tuple(out)
    return tuple(int(x) for x in spec.split(",") if x.strip())


def _parse_mesh_params(items) -> dict:
    out = {}
    for it in items or []:
        k, _, v = it.partition("=")
        if not v:
            raise ValueError(f"mesh parameter must look like key=value, got {it!r}")
        out[k.strip()] = float(v)
    return out


def _fmt(x, spec=".6e"):
    if x is None:
        return ""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), spec)


# --- convergence sweeps ---------------------------------------------------------

def run_convergence(config) -> list:
    """Solve every level of ``config`` and return one row dict per r.

    ``ratio`` is the previous level's error over this level's error.
    """
    from .assembly import run_level
    from .config import lshape_cell_nodes, reference_value
    from .geometry import KressParams, mesh_generate

    params = KressParams(config.q, config.n_per_edge)
    ref = reference_value(config.family)
    rows = []
    cache = {}
    prev = None
    for r in config.rs:
        mesh = mesh_generate(config.family, r, **config.mesh_params)
        enrich = cell_params = None
        block = None
        if config.family == "lshape":
            nL = config.big_cell_nodes or lshape_cell_nodes(r)
            cell_params = {0: KressParams(config.q, nL)}
            block = 0
            if config.enrich:
                enrich = {0: [-1.0]}
        try:
            res = run_level(mesh, r, ref, config.p, config.element_type, params, enrich,
                            config.kappa, config.rescale, block, config.solver, cache, cell_params)
        except Exception as exc:
            raise RuntimeError(f"{config.family} r={r}: {exc}") from exc
        err = res.error
        rows.append({
            "r": r, "dofs": res.dofs, "error": err,
            "ratio": None if prev is None or not err else prev / err,
            "kappa_global": res.kappa_global, "kappa_block": res.kappa_block,
            "wall_ms": res.wall_ms if config.timing else None,
        })
        prev = err
        log.info("%s r=%d dofs=%d error=%.4e", config.family, r, res.dofs, err)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([
            row["r"], row["dofs"], _fmt(row["error"], ".10e"), _fmt(row["ratio"], ".6f"),
            _fmt(row["kappa_global"], ".6e"), _fmt(row["kappa_block"], ".6e"),
            _fmt(row["wall_ms"], ".1f"),
        ])
    return buf.getvalue()


def read_csv(path) -> list:
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {}
            for k, v in rec.items():
                if v in ("", None):
                    row[k] = None
                elif k in ("r", "dofs"):
                    row[k] = int(v)
                else:
                    try:
                        row[k] = float(v)
                    except ValueError:
                        row[k] = v
            rows.append(row)
    return rows


def golden_check(config, rows) -> list:
    """Compare a sweep against the golden tables; returns mismatch messages."""
    from .config import (FAMILY_RATIO_TOL, GOLDEN_FAMILIES, GOLDEN_LSHAPE, LSHAPE_ERROR_DIGITS,
                         LSHAPE_KAPPA_DIGITS, LSHAPE_RATIO_TOL, digits_match)

    bad = []
    if config.p != 1:
        return bad
    if config.family == "lshape":
        if not config.enrich or config.element_type != 2:
            return bad
        for row in rows:
            g = GOLDEN_LSHAPE.get(row["r"])
            if g is None:
                continue
            err, ratio, kA, kL = g
            if not digits_match(row["error"], err, LSHAPE_ERROR_DIGITS):
                bad.append(f"r={row['r']}: error {row['error']:.4e} vs {err:.4e}")
            if ratio is not None and row["ratio"] is not None and abs(row["ratio"] - ratio) > LSHAPE_RATIO_TOL:
                bad.append(f"r={row['r']}: ratio {row['ratio']:.4f} vs {ratio:.4f}")
            if row["kappa_global"] is not None and not config.rescale:
                if not digits_match(row["kappa_global"], kA, LSHAPE_KAPPA_DIGITS):
                    bad.append(f"r={row['r']}: kappa(A) {row['kappa_global']:.4e} vs {kA:.4e}")
                if row["kappa_block"] is not None and not digits_match(row["kappa_block"], kL, LSHAPE_KAPPA_DIGITS):
                    bad.append(f"r={row['r']}: kappa(A_L) {row['kappa_block']:.4e} vs {kL:.4e}")
        return bad
    table = GOLDEN_FAMILIES.get((config.family, config.element_type))
    if table is None:
        return bad
    for i, row in enumerate(rows):
        g = table.get(row["r"])
        # ratios are only comparable between the same consecutive levels
        if g is None or g[1] is None or row["ratio"] is None or i == 0 or rows[i - 1]["r"] * 2 != row["r"]:
            continue
        if abs(row["ratio"] - g[1]) > FAMILY_RATIO_TOL:
            bad.append(f"r={row['r']}: ratio {row['ratio']:.4f} vs {g[1]:.4f} (window {FAMILY_RATIO_TOL})")
    return bad


# --- plotting --------------------------------------------------------------------

def _loglog_slope(x, y):
    import numpy as np

    x, y = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if len(x) < 2:
        return None
    return float(np.polyfit(x, y, 1)[0])


def emit_plot(tables, labels=None, styles=None) -> bytes:
    """Log-log error (left) and condition number (right) against r as SVG bytes.

    ``tables`` is a list of row lists; ``styles`` optional matplotlib line
    styles per table (``"dashed"`` for Type 1, ``"solid"`` for Type 2). Output is
    byte-identical for identical inputs.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not tables or not any(tables):
        raise ValueError("nothing to plot")
    labels = labels or [f"run {i}" for i in range(len(tables))]
    styles = styles or ["solid"] * len(tables)
    with matplotlib.rc_context({"svg.hashsalt": "curvtrefftz", "svg.fonttype": "none",
                                "path.simplify": False}):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(9, 3.6))
        for rows, lab, ls in zip(tables, labels, styles):
            rs = [row["r"] for row in rows if row.get("error")]
            es = [row["error"] for row in rows if row.get("error")]
            if rs:
                s = _loglog_slope(rs, es)
                txt = lab if s is None else f"{lab} (slope {s:.2f})"
                ax0.loglog(rs, es, linestyle=ls, marker="o", label=txt)
            kr = [row["r"] for row in rows if row.get("kappa_global")]
            ks = [row["kappa_global"] for row in rows if row.get("kappa_global")]
            if kr:
                ax1.loglog(kr, ks, linestyle=ls, marker="s", label=lab)
        ax0.set_xlabel("r")
        ax0.set_ylabel("H1 error")
        ax1.set_xlabel("r")
        ax1.set_ylabel("condition number")
        for ax in (ax0, ax1):
            ax.grid(True, which="both", lw=0.3)
            if ax.lines:
                ax.legend(fontsize=7)
        fig.tight_layout()
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
        plt.close(fig)
    return buf.getvalue()


# --- commands ----------------------------------------------------------------------

def _cmd_mesh(args):
    from .geometry import domain_area, mesh_generate, mesh_validate, on_domain_boundary

    mesh = mesh_generate(args.family, args.r, **_parse_mesh_params(args.mesh_param))
    issues = mesh_validate(mesh, domain_area(args.family), on_domain_boundary(args.family))
    print(f"{args.family} r={args.r}: {len(mesh.vertices)} vertices, {len(mesh.edges)} edges, "
          f"{len(mesh.cells)} cells")
    for msg in issues:
        print(f"  issue: {msg}")
    if args.out:
        mesh.save(args.out)
    return 1 if issues else 0


def _config_from_args(args):
    from .config import RunConfig

    return RunConfig(
        family=args.family, rs=parse_r_list(args.r), p=args.p, element_type=args.type,
        n_per_edge=args.n_per_edge, q=args.q, tau=args.tau, solver=args.solver,
        enrich=args.enrich, kappa=args.kappa, rescale=args.rescale,
        big_cell_nodes=args.big_cell_nodes, csv=args.csv, svg=args.svg,
        golden=not args.no_golden, timing=not args.no_timing,
        mesh_params=_parse_mesh_params(args.mesh_param),
    )


def _cmd_solve(args):
    cfg = _config_from_args(args)
    rows = run_convergence(cfg)
    text = rows_to_csv(rows)
    if cfg.csv:
        with open(cfg.csv, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if cfg.svg:
        with open(cfg.svg, "wb") as fh:
            fh.write(emit_plot([rows], [cfg.family], ["dashed" if cfg.element_type == 1 else "solid"]))
    if cfg.golden:
        bad = golden_check(cfg, rows)
        for msg in bad:
            print(f"golden mismatch: {msg}", file=sys.stderr)
        if bad:
            return 3
    return 0


def _cmd_edgebasis(args):
    import numpy as np

    from .edgespace import build_edge_basis, build_type1_basis
    from .geometry import CircularArc, Line, hyperbola_edge

    if args.curve == "hyperbola":
        curve = hyperbola_edge()
    elif args.curve == "arc":
        curve = CircularArc((0.0, 0.0), 1.0, 0.0, math.pi / 3)
    else:
        curve = Line((0.0, 0.0), (1.0, 0.0))
    if args.type == 1:
        b = build_type1_basis(curve, args.p)
    else:
        b = build_edge_basis(curve, args.p, args.variant, tau=args.tau, full_set=args.full_set)
    info = {
        "curve": args.curve, "p": args.p, "variant": args.variant, "type": args.type,
        "kept_indices": [int(i) + 1 for i in b.kept_indices],  # 1-based, as in the tables
        # pivot order within the candidate set (1-based)
        "pivots": [int(i) + 1 for i in b.pivots],
        "labels": list(b.labels), "dim": len(b),
        "endpoint_values": np.round([[b.trace(np.array([t]), j)[0] for t in (0.0, 1.0)]
                                     for j in range(len(b))], 12).tolist(),
    }
    text = json.dumps(info, indent=2)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_interp(args):
    from .geometry import KressParams
    from .interpolation import interp_error_study

    rows = interp_error_study(args.family, args.p, parse_r_list(args.r), args.test, args.type,
                              KressParams(args.q, args.n_per_edge), **_parse_mesh_params(args.mesh_param))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("r", "error", "ratio"))
    for row in rows:
        w.writerow((row.r, _fmt(row.error, ".10e"), _fmt(row.ratio, ".6f")))
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_plot(args):
    tables = [read_csv(p) for p in args.csv]
    labels = args.label or [os.path.splitext(os.path.basename(p))[0] for p in args.csv]
    styles = args.style or None
    data = emit_plot(tables, labels, styles)
    with open(args.out, "wb") as fh:
        fh.write(data)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="curvtrefftz", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p, r_default):
        p.add_argument("--family", default="lshape")
        p.add_argument("--r", default=r_default, help="'1..16' (doubling) or '4,8,16'")
        p.add_argument("--p", type=int, default=1)
        p.add_argument("--type", type=int, default=2, choices=(1, 2))
        p.add_argument("--n-per-edge", type=int, default=96)
        p.add_argument("--q", type=int, default=7, help="Kress grading order")
        p.add_argument("--mesh-param", action="append", metavar="KEY=VALUE")

    m = sub.add_parser("mesh", help="generate and validate a mesh")
    m.add_argument("--family", default="lshape")
    m.add_argument("--r", type=int, default=4)
    m.add_argument("--mesh-param", action="append", metavar="KEY=VALUE")
    m.add_argument("--out")
    m.set_defaults(func=_cmd_mesh)

    s = sub.add_parser("solve", help="convergence sweep with golden-table check")
    common(s, "1..8")
    s.add_argument("--tau", type=float, default=1e-12)
    s.add_argument("--solver", default="direct", choices=("direct", "cg"))
    s.add_argument("--enrich", action="store_true", help="L-cell bubble enrichment")
    s.add_argument("--kappa", action="store_true", help="report condition numbers")
    s.add_argument("--rescale", action="store_true", help="diagonally rescale before kappa")
    s.add_argument("--big-cell-nodes", type=int, default=None)
    s.add_argument("--csv")
    s.add_argument("--svg")
    s.add_argument("--no-golden", action="store_true")
    s.add_argument("--no-timing", action="store_true", help="leave wall_ms empty (bit-identical CSV)")
    s.set_defaults(func=_cmd_solve)

    e = sub.add_parser("edgebasis", help="edge-space construction by GECP")
    e.add_argument("--curve", default="hyperbola", choices=("hyperbola", "arc", "line"))
    e.add_argument("--p", type=int, default=3)
    e.add_argument("--type", type=int, default=2, choices=(1, 2))
    e.add_argument("--variant", default="plain", choices=("plain", "rescaled"))
    e.add_argument("--full-set", action="store_true")
    e.add_argument("--tau", type=float, default=1e-12)
    e.add_argument("--out")
    e.set_defaults(func=_cmd_edgebasis)

    i = sub.add_parser("interp", help="interpolation-error study")
    common(i, "4,8,16")
    i.add_argument("--test", default="rez3")
    i.add_argument("--csv")
    i.set_defaults(func=_cmd_interp, family="pegboard")

    pl = sub.add_parser("plot", help="SVG of one or more CSV tables")
    pl.add_argument("--csv", nargs="+", required=True)
    pl.add_argument("--label", nargs="+")
    pl.add_argument("--style", nargs="+")
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=_cmd_plot)
    return ap


def main(argv=None) -> int:
    _apply_threads()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
