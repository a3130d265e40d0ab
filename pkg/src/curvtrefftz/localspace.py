"""Local Trefftz spaces on curvilinear cells and their boundary-only matrices.

A local space holds vertex and edge functions (harmonic, with the given
piecewise trace) and bubbles ``phi = psi + q`` where ``q`` is an
anti-Laplacian of a monomial and ``psi`` is harmonic with trace ``-q``. Every
function is stored by its Dirichlet trace, the conjugate trace of its harmonic
part and, for bubbles, the polynomial part, which is all the stiffness and
load computations need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bie import HarmonicRep, NystromSolver
from .edgespace import (TAU, EdgeBasis, build_edge_basis, build_type1_basis, frame_for_edge,
                        hierarchical_spanning_set)
from .geometry.grid import BoundaryGrid, KressParams, boundary_grid
from .geometry.mesh import Cell, Mesh
from .polynomial import Poly2, anti_laplacian


@dataclass(eq=False)
class LocalBasisFn:
    """One local basis function.

    ``htrace``/``hdtrace`` are the trace of the harmonic part and its
    derivative in the grid parameter; ``conj`` is that part's conjugate trace.
    For bubbles ``poly_part`` is q and ``lap`` its Laplacian, so the full trace
    ``htrace + q`` vanishes.
    """

    kind: str
    owner: tuple
    htrace: np.ndarray
    hdtrace: np.ndarray
    conj: np.ndarray = None
    poly_part: Poly2 = None
    lap: Poly2 = None

    def trace(self, grid: BoundaryGrid) -> np.ndarray:
        if self.poly_part is None:
            return self.htrace
        return self.htrace + self.poly_part.eval(grid.pts)

    def harmonic_rep(self, grid: BoundaryGrid) -> HarmonicRep:
        return HarmonicRep(grid, self.htrace, self.conj, self.hdtrace)


@dataclass(eq=False)
class LocalSpace:
    cell: Cell
    p: int
    grid: BoundaryGrid
    basis: list
    element_type: int = 2
    vertex_ids: tuple = ()
    solver: NystromSolver = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def center(self):
        return tuple(self.grid.centroid)


@dataclass
class LocalMatrices:
    A: np.ndarray
    b: np.ndarray
    asymmetry: float = 0.0


# --- edge bases shared across cells ---------------------------------------

def edge_basis_for(mesh: Mesh, eid: int, p: int, element_type: int = 2,
                   variant: str = "plain", tau: float = TAU) -> EdgeBasis:
    """The basis of edge ``eid`` in its global frame (z0 at the lower vertex id)."""
    e = mesh.edges[eid]
    reverse = e.v0 > e.v1
    if element_type == 1:
        return build_type1_basis(e.curve, p, reverse)
    return build_edge_basis(e.curve, p, variant, reverse=reverse, tau=tau)


def mesh_edge_bases(mesh: Mesh, p: int, element_type: int = 2, variant: str = "plain",
                    tau: float = TAU) -> list:
    """Edge bases for all mesh edges; straight edges share one computation
    per shape since their selection is translation invariant."""
    cache = {}
    out = []
    for e in mesh.edges:
        key = None
        if e.straight:
            d = e.curve.end - e.curve.start
            key = (round(float(d[0]), 12), round(float(d[1]), 12), e.v0 > e.v1)
        if key is not None and key in cache:
            out.append(_translated_basis(cache[key], e))
            continue
        b = edge_basis_for(mesh, e.id, p, element_type, variant, tau)
        if key is not None:
            cache[key] = b
        out.append(b)
    return out


def _translated_basis(ref: EdgeBasis, e) -> EdgeBasis:
    # same kept indices on a translated copy: rebuild only the functions
    if ref.kind == "type1":
        return build_type1_basis(e.curve, ref.p, ref.reverse)
    frame = frame_for_edge(e.curve, ref.reverse)
    S = hierarchical_spanning_set(frame, ref.p, ref.coords)
    return EdgeBasis(frame, ref.p, ref.kept_indices, tuple(S.functions[i] for i in ref.kept_indices),
                     ref.labels, ref.variant, ref.coords, ref.kind, e.curve, ref.reverse)


# --- local space -------------------------------------------------------------

def bubble_multi_indices(p: int) -> list:
    """Multi-indices ``alpha`` with ``|alpha| <= p - 2``, by degree."""
    return [(a, d - a) for d in range(p - 1) for a in range(d, -1, -1)]


def _edge_trace(basis: EdgeBasis, grid: BoundaryGrid, k: int, j: int):
    """Values and d/dsigma of edge-basis function ``j`` on loop entry ``k``."""
    sl = grid.edge_slice(k)
    t = grid.t[sl]
    val = basis.trace(t, j)
    dt = basis.dtrace_dt(t, j)
    V = basis.curve.velocity(t)
    dtds = np.sum(grid.dx[sl] * V, axis=1) / np.sum(V * V, axis=1)
    return val, dt * dtds


def build_local_space(mesh: Mesh, cell: Cell, p: int, edge_bases: list, element_type: int = 2,
                      params: KressParams = KressParams(), enrich=None, keep_solver: bool = False,
                      bubbles: bool = True) -> LocalSpace:
    """Vertex, edge and bubble functions of one cell with their conjugates.

    ``edge_bases`` is indexed by global edge id. ``enrich`` is an optional
    list of polynomials P; each adds a bubble with Laplacian P.
    """
    grid = boundary_grid(mesh, cell, params)
    N = grid.n
    E = cell.n_edges
    verts = mesh.cell_vertices(cell)
    basis = []

    def vertex_fn(k):
        val = np.zeros(N)
        der = np.zeros(N)
        vid = verts[k]
        for kk in (k, (k - 1) % E):
            eid, _ = cell.loop[kk]
            e = mesh.edges[eid]
            b = edge_bases[eid]
            z0_vid = e.v1 if b.reverse else e.v0
            j = 0 if z0_vid == vid else 1
            sl = grid.edge_slice(kk)
            v, d = _edge_trace(b, grid, kk, j)
            val[sl] += v
            der[sl] += d
        return val, der

    for k in range(E):
        val, der = vertex_fn(k)
        basis.append(LocalBasisFn("vertex", (verts[k],), val, der))
    for k, (eid, _) in enumerate(cell.loop):
        b = edge_bases[eid]
        sl = grid.edge_slice(k)
        for j in range(2, len(b)):
            val = np.zeros(N)
            der = np.zeros(N)
            val[sl], der[sl] = _edge_trace(b, grid, k, j)
            basis.append(LocalBasisFn("edge", (eid, j), val, der))
    c = tuple(grid.centroid)
    polys = []
    if bubbles:
        polys += [(("bubble", al), Poly2.monomial(al[0], al[1], c)) for al in bubble_multi_indices(p)]
    for i, P in enumerate(enrich or []):
        polys.append((("enrich", i), P.shifted(c) if isinstance(P, Poly2) else Poly2.const(P, c)))
    for (kind, owner), P in polys:
        q = anti_laplacian(P)
        val = -q.eval(grid.pts)
        der = -np.sum(q.grad_eval(grid.pts) * grid.dx, axis=1)
        basis.append(LocalBasisFn(kind, (owner,), val, der, None, q, P))

    solver = NystromSolver(grid)
    D = np.column_stack([f.hdtrace for f in basis]) if basis else np.zeros((N, 0))
    V = solver.solve(D)
    for i, f in enumerate(basis):
        f.conj = V[:, i]
    return LocalSpace(cell, p, grid, basis, element_type, tuple(verts),
                      solver if keep_solver else None)


# --- Green reductions -----------------------------------------------------------

def poly_integral(grid: BoundaryGrid, P: Poly2) -> float:
    """``int_K P dx = oint dQ/dn ds`` with ``Q`` an anti-Laplacian of P."""
    Q = anti_laplacian(P)
    return grid.h * float(np.sum(np.sum(Q.grad_eval(grid.pts) * grid.nu, axis=1)))


def poly_harmonic_integral(grid: BoundaryGrid, P: Poly2, g, w) -> np.ndarray:
    """``int_K P v dx`` for harmonic v with trace ``g`` and conjugate trace ``w``.

    Green's identity with ``Q = anti_laplacian(P)`` gives
    ``oint (v dQ/dn - Q dv/dn) ds``; the last term is integrated by parts
    along the boundary as ``oint w dQ/dsigma dsigma``. ``g``/``w`` may be
    ``(N,)`` or ``(N, m)``.
    """
    Q = anti_laplacian(P)
    G = Q.grad_eval(grid.pts)
    dQn = np.sum(G * grid.nu, axis=1)
    dQs = np.sum(G * grid.dx, axis=1)
    return grid.h * (dQn @ np.asarray(g) + dQs @ np.asarray(w))


def local_stiffness(space: LocalSpace, return_asymmetry: bool = False):
    """Element stiffness for -Laplace from boundary data only.

    Harmonic pairs: ``oint (du_a/dn) u_b ds = -oint v_a du_b/dsigma dsigma``.
    Harmonic against bubble vanishes (zero trace, zero Laplacian). Bubble
    pairs: ``-int_K phi_a lap(phi_b) dx`` split into polynomial and harmonic
    parts.
    """
    g = space.grid
    B = space.basis
    if any(f.conj is None for f in B):
        raise ValueError("local space has unsolved harmonic parts")
    n = len(B)
    A = np.zeros((n, n))
    harm = [i for i, f in enumerate(B) if f.poly_part is None]
    bub = [i for i, f in enumerate(B) if f.poly_part is not None]
    if harm:
        W = np.column_stack([B[i].conj for i in harm])
        D = np.column_stack([B[i].hdtrace for i in harm])
        A[np.ix_(harm, harm)] = -g.h * (W.T @ D)
    for a in bub:
        fa = B[a]
        for b in bub:
            Pb = B[b].lap
            val = poly_integral(g, fa.poly_part * Pb) + \
                poly_harmonic_integral(g, Pb, fa.htrace, fa.conj)
            A[a, b] = -val
    asym = float(np.max(np.abs(A - A.T))) if n else 0.0
    A = 0.5 * (A + A.T)
    return (A, asym) if return_asymmetry else A


def local_load(space: LocalSpace, f) -> np.ndarray:
    """``int_K f v dx`` for every basis function; ``f`` a Poly2 or a constant."""
    g = space.grid
    c = space.center
    if not isinstance(f, Poly2):
        f = Poly2.const(float(f), c)
    if f.is_zero():
        return np.zeros(space.dim)
    f = f.shifted(c)
    B = space.basis
    G = np.column_stack([b.htrace for b in B])
    W = np.column_stack([b.conj for b in B])
    out = np.asarray(poly_harmonic_integral(g, f, G, W), float).copy()
    for i, b in enumerate(B):
        if b.poly_part is not None:
            out[i] += poly_integral(g, f * b.poly_part)
    return out


def local_matrices(space: LocalSpace, f=1.0) -> LocalMatrices:
    A, asym = local_stiffness(space, return_asymmetry=True)
    return LocalMatrices(A, local_load(space, f), asym)


def h1_seminorm_sq(space_or_A, c) -> float:
    """``c^T A_K c`` for a local space (or a stiffness matrix)."""
    A = space_or_A if isinstance(space_or_A, np.ndarray) else local_stiffness(space_or_A)
    c = np.asarray(c, float)
    if c.shape != (A.shape[0],):
        raise ValueError(f"coefficient vector has shape {c.shape}, expected ({A.shape[0]},)")
    return float(c @ A @ c)


def bubble_enrichment(mesh: Mesh, cell: Cell, f=1.0, params: KressParams = KressParams()):
    """The bubble phi with ``-lap(phi) = f`` and zero trace, with its load
    ``int_K f phi`` and energy ``|phi|^2_{H^1}``.

    Returns ``(fn, grid, load, energy)``. Harmonic functions are
    energy-orthogonal to phi, so it decouples from the rest of the space.
    """
    grid = boundary_grid(mesh, cell, params)
    c = tuple(grid.centroid)
    fP = f.shifted(c) if isinstance(f, Poly2) else Poly2.const(float(f), c)
    P = -fP
    q = anti_laplacian(P)
    val = -q.eval(grid.pts)
    der = -np.sum(q.grad_eval(grid.pts) * grid.dx, axis=1)
    fn = LocalBasisFn("enrich", (0,), val, der, None, q, P)
    if not P.is_zero():
        fn.conj = NystromSolver(grid).solve(der)
    else:
        fn.conj = np.zeros(grid.n)
    load = poly_integral(grid, fP * q) + float(poly_harmonic_integral(grid, fP, val, fn.conj))
    energy = load  # |phi|^2 = -int phi lap(phi) = int f phi
    return fn, grid, load, energy


def local_dimension_expected(edge_dims, p: int) -> int:
    """``C(p, 2) + sum(dim P_p(e)) - #edges``."""
    return math.comb(p, 2) + int(sum(edge_dims)) - len(edge_dims)
