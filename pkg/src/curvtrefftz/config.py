"""Run configuration, reference values and golden tables."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

# |u|^2_{H^1} for -lap u = 1, u = 0 on the unit square (Fourier series value)
SQUARE_REF = 3.51442537e-2
# same quantity on the L-shaped domain (-1,1)^2 minus [0,1]x[-1,0]
LSHAPE_REF = 0.21407580269

FAMILIES = ("pegboard", "shuriken", "jigsaw", "ptriangle", "lshape", "square")
SOLVERS = ("direct", "cg")

# golden values: r -> (error, ratio, kappa(A), kappa(A_L))
GOLDEN_LSHAPE = {
    1: (1.3629e-01, None, 1.2908e+01, 5.7834e+00),
    2: (6.7610e-02, 2.0158, 3.7679e+01, 7.5699e+00),
    4: (3.3734e-02, 2.0042, 1.2527e+02, 8.9390e+00),
    8: (1.6855e-02, 2.0014, 4.6339e+02, 9.8197e+00),
    16: (8.4305e-03, 1.9993, 1.7919e+03, 1.0377e+01),
    32: (4.2289e-03, 1.9935, 7.0585e+03, 1.0728e+01),
    64: (2.1468e-03, 1.9699, 2.8029e+04, 1.2450e+01),
}

# golden (error, ratio) for the curved families, p = 1; keys (family, type)
GOLDEN_FAMILIES = {
    ("shuriken", 1): {4: (7.882e-02, None), 8: (8.200e-02, 0.961), 16: (8.813e-02, 0.930),
                      32: (9.232e-02, 0.955), 64: (9.470e-02, 0.975), 128: (9.600e-02, 0.987)},
    ("shuriken", 2): {4: (5.629e-02, None), 8: (2.847e-02, 1.977), 16: (1.429e-02, 1.993),
                      32: (7.150e-03, 1.998), 64: (3.576e-03, 1.999), 128: (1.788e-03, 2.000)},
    ("pegboard", 2): {4: (3.470e-02, None), 8: (1.726e-02, 2.010), 16: (8.537e-03, 2.022),
                      32: (4.233e-03, 2.017), 64: (2.106e-03, 2.010), 128: (1.050e-03, 2.006)},
    ("jigsaw", 2): {4: (3.209e-02, None), 8: (1.538e-02, 2.086), 16: (7.559e-03, 2.035),
                    32: (3.754e-03, 2.014), 64: (1.871e-03, 2.006), 128: (9.327e-04, 2.006)},
}

# tolerances: significant digits on the exact-geometry table, a ratio window
# on the families whose geometry is only described qualitatively
LSHAPE_ERROR_DIGITS = 3
LSHAPE_RATIO_TOL = 0.01
LSHAPE_KAPPA_DIGITS = 2
FAMILY_RATIO_TOL = 0.05

# node budget for the large L cell (one dense Nystrom system)
LSHAPE_CELL_NODES = 64
LSHAPE_NODE_BUDGET = 6400


def reference_value(family: str) -> float:
    return LSHAPE_REF if family == "lshape" else SQUARE_REF


def lshape_cell_nodes(r: int, n_max: int = LSHAPE_CELL_NODES, budget: int = LSHAPE_NODE_BUDGET) -> int:
    """Nodes per edge on the large L cell (6r + 2 edges), capped by a total budget."""
    n = min(n_max, budget // (6 * r + 2))
    n -= n % 2
    return max(n, 8)


def digits_match(value: float, ref: float, digits: int) -> bool:
    """Relative agreement to ``digits`` significant digits (half a unit in the last)."""
    return abs(value - ref) <= 0.5 * 10.0 ** (1 - digits) * abs(ref)


@dataclass
class RunConfig:
    """One convergence sweep.

    ``n_per_edge`` and ``q`` set the boundary grids; ``big_cell_nodes``
    overrides the L-cell resolution (default: :func:`lshape_cell_nodes`).
    """

    family: str = "lshape"
    rs: tuple = (1, 2, 4, 8)
    p: int = 1
    element_type: int = 2
    n_per_edge: int = 96
    q: int = 7
    tau: float = 1e-12
    solver: str = "direct"
    enrich: bool = False
    kappa: bool = False
    rescale: bool = False
    big_cell_nodes: int | None = None
    csv: str | None = None
    svg: str | None = None
    golden: bool = True
    timing: bool = True
    seed: int = 0
    mesh_params: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rs = tuple(int(r) for r in self.rs)
        self.validate()

    def validate(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if not self.rs or any(r < 1 for r in self.rs):
            raise ValueError("r values must be positive integers")
        if not 1 <= self.p <= 6:
            raise ValueError("p must lie in 1..6")
        if self.element_type not in (1, 2):
            raise ValueError("element type must be 1 or 2")
        if self.n_per_edge < 8 or self.n_per_edge % 2:
            raise ValueError("n_per_edge must be even and >= 8")
        if self.q < 2:
            raise ValueError("kress order q must be >= 2")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}")
        if self.enrich and self.family != "lshape":
            raise ValueError("enrichment is only defined for the lshape family")
        if self.big_cell_nodes is not None and (self.big_cell_nodes < 8 or self.big_cell_nodes % 2):
            raise ValueError("big_cell_nodes must be even and >= 8")

    def to_dict(self) -> dict:
        return asdict(self)
