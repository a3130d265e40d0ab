"""Projection-based interpolation into the local Trefftz spaces.

On each edge the trace is interpolated at the endpoints and projected onto
the edge-interior functions in the H^{1/2}(e) inner product

    (phi, psi) = int phi psi ds + int int (phi(x)-phi(y))(psi(x)-psi(y)) / |x-y|^2 ds ds;

in the interior the Laplacian is L^2-projected onto P_{p-2}(K). Errors are
measured with boundary integrals only, which restricts general test
functions to harmonic ones (polynomials are handled exactly).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bie import DirichletTrace, NystromSolver, trace_of_function, trace_of_poly
from .edgespace import TAU, EdgeBasis
from .geometry.curves import Curve
from .geometry.families import mesh_generate
from .geometry.grid import BoundaryGrid, KressParams, boundary_grid
from .geometry.mesh import Cell, Mesh
from .localspace import (_edge_trace, bubble_multi_indices, mesh_edge_bases, poly_harmonic_integral,
                         poly_integral)
from .polynomial import Poly2, anti_laplacian


# --- H^{1/2} inner product ------------------------------------------------------

@dataclass(frozen=True)
class H12Kernel:
    """Offset tensor Gauss panels for the H^{1/2}(e) double integral.

    The x and y rules use ``m`` and ``m + 1`` points per panel, so no node pair
    coincides and the removable diagonal singularity is never evaluated.
    For smooth data the integrand is smooth, and the rule converges fast.
    """

    curve: Curve
    panels: int = 8
    m: int = 12
    tx: np.ndarray = field(init=False, repr=False)
    ty: np.ndarray = field(init=False, repr=False)
    wx: np.ndarray = field(init=False, repr=False)
    wy: np.ndarray = field(init=False, repr=False)
    K: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        tx, wx = _panel_rule(self.panels, self.m)
        ty, wy = _panel_rule(self.panels, self.m + 1)
        sx = _speed(self.curve, tx)
        sy = _speed(self.curve, ty)
        X, Y = self.curve.position(tx), self.curve.position(ty)
        d2 = (X[:, None, 0] - Y[None, :, 0]) ** 2 + (X[:, None, 1] - Y[None, :, 1]) ** 2
        object.__setattr__(self, "tx", tx)
        object.__setattr__(self, "ty", ty)
        object.__setattr__(self, "wx", wx * sx)
        object.__setattr__(self, "wy", wy * sy)
        object.__setattr__(self, "K", np.outer(wx * sx, wy * sy) / d2)

    def gram(self, funcs) -> np.ndarray:
        """H^{1/2} Gram matrix of callables ``f(t)`` on the edge."""
        Fx = np.column_stack([np.asarray(f(self.tx), float) for f in funcs])
        Fy = np.column_stack([np.asarray(f(self.ty), float) for f in funcs])
        k = len(funcs)
        G = np.empty((k, k))
        # L2 part, symmetrized over both rules
        L2 = 0.5 * ((Fx * self.wx[:, None]).T @ Fx + (Fy * self.wy[:, None]).T @ Fy)
        D = [Fx[:, a][:, None] - Fy[:, a][None, :] for a in range(k)]
        for a in range(k):
            KD = self.K * D[a]
            for b in range(a, k):
                G[a, b] = G[b, a] = float(np.sum(KD * D[b]))
        return G + L2

    def inner(self, phi, psi) -> float:
        return float(self.gram([phi, psi])[0, 1])


def _panel_rule(panels, m):
    x, w = np.polynomial.legendre.leggauss(m)
    brk = np.linspace(0.0, 1.0, panels + 1)
    a, b = brk[:-1, None], brk[1:, None]
    t = (0.5 * (b - a) * (x[None, :] + 1) + a).ravel()
    ww = (0.5 * (b - a) * w[None, :]).ravel()
    return t, ww


def _speed(curve, t):
    V = curve.velocity(t)
    return np.hypot(V[:, 0], V[:, 1])


def h12_inner(curve: Curve, phi, psi, panels: int = 8, m: int = 12) -> float:
    """``(phi, psi)_{H^{1/2}(e)}`` for callables of the curve parameter on [0, 1].

    Examples
    --------
    >>> from curvtrefftz.geometry import Line
    >>> e = Line((0.0, 0.0), (1.0, 0.0))
    >>> round(h12_inner(e, lambda t: t, lambda t: t), 10)
    1.3333333333
    """
    return H12Kernel(curve, panels, m).inner(phi, psi)


# --- test functions -------------------------------------------------------------

@dataclass(frozen=True)
class TestFunction:
    """A function with callables for values and gradient at points ``(..., 2)``.

    ``lap`` is its Laplacian as a polynomial (``None`` means harmonic).
    """

    name: str
    f: Callable
    grad: Callable
    lap: Poly2 | None = None

    __test__ = False  # not a pytest class

    @classmethod
    def from_poly(cls, P: Poly2, name="poly"):
        L = P.laplacian()
        return cls(name, P.eval, P.grad_eval, None if L.is_zero() else L)


def _z(pts):
    pts = np.asarray(pts, float)
    return pts[..., 0] + 1j * pts[..., 1]


def _analytic(name, F, dF):
    # Re F with grad (Re F', -Im F')
    def grad(pts):
        d = dF(_z(pts))
        return np.stack([d.real, -d.imag], axis=-1)
    return TestFunction(name, lambda pts: F(_z(pts)).real, grad)


TEST_FUNCTIONS = {
    "rez3": _analytic("rez3", lambda z: z**3, lambda z: 3 * z**2),
    "rez2": _analytic("rez2", lambda z: z**2, lambda z: 2 * z),
    "imz3": _analytic("imz3", lambda z: -1j * z**3, lambda z: -3j * z**2),
    "expz": _analytic("expz", np.exp, np.exp),
    "const": _analytic("const", lambda z: np.ones_like(z), lambda z: np.zeros_like(z)),
}


def test_function(name: str) -> TestFunction:
    try:
        return TEST_FUNCTIONS[name]
    except KeyError:
        raise ValueError(f"unknown test function {name!r}; choose from {sorted(TEST_FUNCTIONS)}")


test_function.__test__ = False


# --- projections ------------------------------------------------------------------

def _basis_callables(basis: EdgeBasis):
    return [(lambda t, j=j: basis.trace(t, j)) for j in range(len(basis))]


def edge_project(v, curve: Curve, basis: EdgeBasis, kernel: H12Kernel | None = None) -> np.ndarray:
    """Coefficients of ``q_e`` on ``basis``.

    ``v`` is a callable of the curve parameter. ``q_e`` matches v at both
    endpoints and ``v - q_e`` is H^{1/2}-orthogonal to the edge-interior
    functions (indices >= 2, which vanish at the endpoints).
    """
    fns = _basis_callables(basis)
    ends = np.array([[basis.trace(np.array([s]), j)[0] for j in (0, 1)] for s in (0.0, 1.0)])
    vend = np.array([float(np.asarray(v(np.array([s])))[0]) for s in (0.0, 1.0)])
    c = np.zeros(len(basis))
    c[:2] = np.linalg.solve(ends, vend)
    if len(basis) == 2:
        return c
    kernel = kernel or H12Kernel(curve)

    def resid(t):
        return np.asarray(v(t), float) - c[0] * fns[0](t) - c[1] * fns[1](t)

    G = kernel.gram(fns[2:] + [resid])
    k = len(basis) - 2
    M, rhs = G[:k, :k], G[:k, k]
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("H^{1/2} Gram of the edge-interior functions is not SPD") from exc
    c[2:] = np.linalg.solve(L.T, np.linalg.solve(L, rhs))
    return c


def interior_project(lap_v, grid: BoundaryGrid, p: int) -> Poly2:
    """L^2(K) projection of a polynomial Laplacian onto ``P_{p-2}(K)``.

    Moments reduce to boundary integrals through anti-Laplacians. The result
    is expanded about the cell centroid.
    """
    c = tuple(grid.centroid)
    if p < 2 or lap_v is None:
        return Poly2.const(0.0, c)
    if not isinstance(lap_v, Poly2):
        if callable(lap_v):
            raise TypeError("interior projection needs a polynomial Laplacian")
        lap_v = Poly2.const(float(lap_v), c)
    if lap_v.is_zero():
        return Poly2.const(0.0, c)
    lap_v = lap_v.shifted(c)
    mons = [Poly2.monomial(a, b, c) for a, b in bubble_multi_indices(p)]
    G = np.array([[poly_integral(grid, ma * mb) for mb in mons] for ma in mons])
    rhs = np.array([poly_integral(grid, lap_v * ma) for ma in mons])
    coef = np.linalg.solve(G, rhs)
    out = Poly2.const(0.0, c)
    for a, m in zip(coef, mons):
        out = out + m * float(a)
    return out


# --- cell interpolant -------------------------------------------------------------

@dataclass
class CellInterpolant:
    """``I_K v``: edge coefficients by loop entry and the interior polynomial.

    The realized element has trace ``q^{dK}`` (piecewise, from the edge
    coefficients) and Laplacian ``interior``.
    """

    cell: Cell
    p: int
    edge_coefs: dict
    interior: Poly2
    edge_bases: list = field(repr=False, default=None)

    def edge_callable(self, eid: int):
        b = self.edge_bases[eid]
        c = self.edge_coefs[eid]
        return lambda t: sum(c[j] * b.trace(t, j) for j in range(len(b)))

    def local_coefficients(self, mesh: Mesh) -> np.ndarray:
        """Coefficients in the local basis order of ``build_local_space``.

        Vertex values, then edge-interior coefficients by loop entry, then
        bubble coefficients (monomials about the centroid).
        """
        out = []
        verts = mesh.cell_vertices(self.cell)
        for k, vid in enumerate(verts):
            eid, _ = self.cell.loop[k]
            e = mesh.edges[eid]
            t = 0.0 if e.v0 == vid else 1.0
            out.append(float(self.edge_callable(eid)(np.array([t]))[0]))
        for eid, _ in self.cell.loop:
            out.extend(self.edge_coefs[eid][2:])
        P = self.interior
        for a, b in bubble_multi_indices(self.p):
            out.append(float(P.coef[a, b]) if a < P.coef.shape[0] and b < P.coef.shape[1] else 0.0)
        return np.array(out)


def _edge_fn_of(v, mesh: Mesh, eid: int):
    if isinstance(v, CellInterpolant):
        return v.edge_callable(eid)
    curve = mesh.edges[eid].curve
    if isinstance(v, Poly2):
        return lambda t: v.eval(curve.position(t))
    return lambda t: np.asarray(v.f(curve.position(t)), float)


def _lap_of(v):
    if isinstance(v, CellInterpolant):
        return v.interior
    if isinstance(v, Poly2):
        return v.laplacian()
    return v.lap


def interpolate_cell(v, mesh: Mesh, cell: Cell, p: int, edge_bases: list,
                     grid: BoundaryGrid | None = None, kernels: dict | None = None) -> CellInterpolant:
    """Projection-based interpolant of ``v`` on one cell.

    ``v`` is a :class:`TestFunction`, a ``Poly2`` or a previous
    :class:`CellInterpolant` (for idempotence checks).
    """
    kernels = {} if kernels is None else kernels
    coefs = {}
    for eid, _ in cell.loop:
        curve = mesh.edges[eid].curve
        if eid not in kernels and len(edge_bases[eid]) > 2:
            kernels[eid] = H12Kernel(curve)
        coefs[eid] = edge_project(_edge_fn_of(v, mesh, eid), curve, edge_bases[eid], kernels.get(eid))
    grid = grid or boundary_grid(mesh, cell)
    qK = interior_project(_lap_of(v), grid, p)
    return CellInterpolant(cell, p, coefs, qK, edge_bases)


def _boundary_trace(I: CellInterpolant, grid: BoundaryGrid) -> DirichletTrace:
    val = np.zeros(grid.n)
    der = np.zeros(grid.n)
    for k, (eid, _) in enumerate(I.cell.loop):
        b = I.edge_bases[eid]
        c = I.edge_coefs[eid]
        sl = grid.edge_slice(k)
        for j in range(len(b)):
            if c[j] != 0.0:
                vv, dd = _edge_trace(b, grid, k, j)
                val[sl] += c[j] * vv
                der[sl] += c[j] * dd
    return DirichletTrace(val, der / grid.speed)


def _trace_of(v, grid: BoundaryGrid) -> DirichletTrace:
    if isinstance(v, CellInterpolant):
        return _boundary_trace(v, grid)
    if isinstance(v, Poly2):
        return trace_of_poly(grid, v)
    return trace_of_function(grid, v.f, v.grad)


def _harmonic_energy(grid: BoundaryGrid, g: DirichletTrace, solver: NystromSolver) -> float:
    dg = g.dsigma(grid)
    w = solver.solve(dg)
    return float(-grid.h * (w @ dg))


def _zero_trace_energy(grid: BoundaryGrid, F: Poly2, solver: NystromSolver) -> float:
    """``|z|^2`` for ``lap z = F`` with zero trace (``z = Z + psi``)."""
    if F is None or F.is_zero():
        return 0.0
    c = tuple(grid.centroid)
    F = F.shifted(c)
    Z = anti_laplacian(F)
    val = -Z.eval(grid.pts)
    der = -np.sum(Z.grad_eval(grid.pts) * grid.dx, axis=1)
    w = solver.solve(der)
    return -(poly_integral(grid, Z * F) + float(poly_harmonic_integral(grid, F, val, w)))


@dataclass
class CellError:
    boundary: float
    interior: float

    @property
    def total(self) -> float:
        return self.boundary + self.interior


def cell_interp_error(v, I: CellInterpolant, grid: BoundaryGrid,
                      solver: NystromSolver | None = None) -> CellError:
    """Squared H^1(K) seminorm of ``v - I_K v`` split into its harmonic
    (boundary) part and its zero-trace (interior) part."""
    solver = solver or NystromSolver(grid)
    g = _trace_of(v, grid) - _boundary_trace(I, grid)
    eb = _harmonic_energy(grid, g, solver)
    lap = _lap_of(v)
    F = None
    if lap is not None and not (isinstance(lap, Poly2) and lap.is_zero()):
        F = lap.shifted(tuple(grid.centroid)) - I.interior
    elif not I.interior.is_zero():
        F = -I.interior
    ei = _zero_trace_energy(grid, F, solver)
    return CellError(eb, ei)


# --- rate studies -------------------------------------------------------------------

@dataclass
class InterpRow:
    r: int
    error: float
    ratio: float | None


def global_interp_error(mesh: Mesh, v, p: int = 1, element_type: int = 2,
                        params: KressParams = KressParams(), tau: float = TAU) -> float:
    """``|v - I v|_{H^1(Omega)}`` summed over cells."""
    from .assembly import cell_shape_key

    eb = mesh_edge_bases(mesh, p, element_type, tau=tau)
    solvers, kernels = {}, {}
    total = 0.0
    for c in mesh.cells:
        grid = boundary_grid(mesh, c, params)
        key = cell_shape_key(mesh, c, (params,))
        solver = solvers.get(key) if key is not None else None
        if solver is None:
            solver = NystromSolver(grid)
            if key is not None:
                solvers[key] = solver
        I = interpolate_cell(v, mesh, c, p, eb, grid, kernels)
        total += cell_interp_error(v, I, grid, solver).total
    return math.sqrt(max(total, 0.0))


def interp_error_study(family: str, p: int = 1, rs=(4, 8, 16, 32), test="rez3",
                       element_type: int = 2, params: KressParams = KressParams(),
                       **mesh_params) -> list:
    """Global interpolation errors and ratios over a mesh family."""
    v = test_function(test) if isinstance(test, str) else test
    rows = []
    prev = None
    for r in rs:
        m = mesh_generate(family, r, **mesh_params)
        err = global_interp_error(m, v, p, element_type, params)
        rows.append(InterpRow(r, err, None if prev is None else prev / err))
        prev = err
    return rows
