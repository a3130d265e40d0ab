"""Global conforming spaces: dof numbering, assembly, Dirichlet elimination,
solves, energy errors and condition numbers."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .edgespace import TAU
from .geometry.grid import KressParams
from .geometry.mesh import Mesh
from .localspace import (LocalMatrices, bubble_multi_indices, build_local_space, local_matrices,
                         mesh_edge_bases)
from .polynomial import Poly2

log = logging.getLogger(__name__)

DENSE_CAP = 3000


@dataclass
class DofMap:
    """Vertices first, then edge interiors by edge id, then cells by id."""

    n_vertex: int
    edge_offset: np.ndarray
    edge_count: np.ndarray
    cell_offset: np.ndarray
    cell_count: np.ndarray
    cell_maps: list
    n: int
    cell_enrich: np.ndarray | None = None

    def edge_dofs(self, eid) -> np.ndarray:
        o = self.edge_offset[eid]
        return np.arange(o, o + self.edge_count[eid])

    def cell_dofs(self, cid) -> np.ndarray:
        o = self.cell_offset[cid]
        return np.arange(o, o + self.cell_count[cid])


def build_dof_map(mesh: Mesh, p: int, edge_bases: list, enrichments=None) -> DofMap:
    """``enrichments`` maps cell id to the number of extra cell functions."""
    enrichments = enrichments or {}
    nv = len(mesh.vertices)
    ecount = np.array([len(b) - 2 for b in edge_bases], int)
    if len(edge_bases) != len(mesh.edges):
        raise ValueError("need one edge basis per mesh edge")
    eoff = nv + np.concatenate([[0], np.cumsum(ecount)[:-1]]).astype(int)
    nb = len(bubble_multi_indices(p))
    ccount = np.array([nb + int(enrichments.get(c.id, 0)) for c in mesh.cells], int)
    base = nv + int(ecount.sum())
    coff = base + np.concatenate([[0], np.cumsum(ccount)[:-1]]).astype(int)
    maps = []
    for c in mesh.cells:
        idx = list(mesh.cell_vertices(c))
        for eid, _ in c.loop:
            idx.extend(range(eoff[eid], eoff[eid] + ecount[eid]))
        idx.extend(range(coff[c.id], coff[c.id] + ccount[c.id]))
        maps.append(np.array(idx, int))
    nen = np.array([int(enrichments.get(c.id, 0)) for c in mesh.cells], int)
    return DofMap(nv, eoff, ecount, coff, ccount, maps, base + int(ccount.sum()), nen)


def enrichment_dofs(dofs: DofMap) -> np.ndarray:
    """Boolean mask of enrichment dofs (the last ones of each cell block)."""
    mask = np.zeros(dofs.n, bool)
    if dofs.cell_enrich is not None:
        for cid, k in enumerate(dofs.cell_enrich):
            if k:
                end = dofs.cell_offset[cid] + dofs.cell_count[cid]
                mask[end - k:end] = True
    return mask


def dirichlet_dofs(mesh: Mesh, dofs: DofMap) -> np.ndarray:
    """Boolean mask of dofs on the domain boundary."""
    mask = np.zeros(dofs.n, bool)
    mask[: dofs.n_vertex] = mesh.boundary_vertex
    for e in mesh.edges:
        if mesh.boundary_edge[e.id]:
            mask[dofs.edge_dofs(e.id)] = True
    return mask


@dataclass
class GlobalSystem:
    A: sp.csr_matrix
    b: np.ndarray
    dirichlet: np.ndarray
    dofs: DofMap
    local: dict = field(default_factory=dict, repr=False)

    @property
    def free(self) -> np.ndarray:
        return np.flatnonzero(~self.dirichlet)

    def reduced(self):
        f = self.free
        return self.A[f][:, f].tocsr(), self.b[f]

    def kappa_matrix(self, drop_enrichment: bool = True):
        """Free-dof stiffness used for condition numbers.

        Enrichment functions decouple from everything else, so their diagonal
        entry is an eigenvalue fixed only by their arbitrary scaling; they are
        left out by default.
        """
        keep = ~self.dirichlet
        if drop_enrichment:
            keep &= ~enrichment_dofs(self.dofs)
        f = np.flatnonzero(keep)
        return self.A[f][:, f].tocsr()


@dataclass
class Solution:
    coef: np.ndarray
    energy: float
    system: GlobalSystem = field(repr=False, default=None)

    def cell_view(self, cid) -> np.ndarray:
        return self.coef[self.system.dofs.cell_maps[cid]]


def _freeze(x):
    if isinstance(x, dict):
        return tuple(sorted((k, _freeze(v)) for k, v in x.items()))
    if isinstance(x, (list, tuple, np.ndarray)):
        return tuple(_freeze(v) for v in x)
    if isinstance(x, float):
        return round(x, 10) + 0.0
    return x


def cell_shape_key(mesh: Mesh, cell, extra=()):
    """Hashable description of a cell up to translation (None if unknown)."""
    o = mesh.vertices[mesh.cell_vertices(cell)[0]]
    parts = []
    for eid, s in cell.loop:
        e = mesh.edges[eid]
        try:
            d = e.curve.translated(-o).to_dict()
        except NotImplementedError:
            return None
        parts.append((_freeze(d), s, e.v0 > e.v1))
    return (tuple(parts),) + tuple(extra)


def local_systems(mesh: Mesh, p: int, edge_bases: list, element_type: int = 2,
                  params: KressParams = KressParams(), f=1.0, enrich=None,
                  cache: dict | None = None, cell_params=None) -> list:
    """Local matrices for every cell, reusing results for translated copies.

    ``enrich`` maps cell ids to lists of enrichment Laplacians;
    ``cell_params`` maps cell ids to per-cell KressParams.
    """
    enrich = enrich or {}
    cell_params = cell_params or {}
    cache = {} if cache is None else cache
    const_f = not isinstance(f, Poly2) or f.degree == 0
    out = []
    for c in mesh.cells:
        prm = cell_params.get(c.id, params)
        en = enrich.get(c.id)
        key = None
        if const_f and not en:
            key = cell_shape_key(mesh, c, (p, element_type, prm, float(f if not isinstance(f, Poly2) else f.coef[0, 0])))
        if key is not None and key in cache:
            out.append(cache[key])
            continue
        space = build_local_space(mesh, c, p, edge_bases, element_type, prm, enrich=en)
        lm = local_matrices(space, f)
        if lm.asymmetry > 1e-8 * max(np.abs(lm.A).max(), 1e-300):
            log.debug("cell %d: stiffness asymmetry %.2e", c.id, lm.asymmetry)
        if key is not None:
            cache[key] = lm
        out.append(lm)
    return out


def assemble(mesh: Mesh, local: list, dofs: DofMap) -> GlobalSystem:
    rows, cols, vals = [], [], []
    b = np.zeros(dofs.n)
    for c, lm in zip(mesh.cells, local):
        m = dofs.cell_maps[c.id]
        if lm.A.shape[0] != len(m):
            raise ValueError(f"cell {c.id}: local size {lm.A.shape[0]} != map size {len(m)}")
        if m.max(initial=-1) >= dofs.n:
            raise IndexError(f"cell {c.id}: dof index out of range")
        rows.append(np.repeat(m, len(m)))
        cols.append(np.tile(m, len(m)))
        vals.append(lm.A.ravel())
        np.add.at(b, m, lm.b)
    A = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(dofs.n, dofs.n)).tocsr()
    A = 0.5 * (A + A.T)
    return GlobalSystem(A.tocsr(), b, dirichlet_dofs(mesh, dofs), dofs)


def solve(system: GlobalSystem, method: str = "direct", tol: float | None = None) -> Solution:
    """Homogeneous Dirichlet solve; returns the full coefficient vector."""
    Af, bf = system.reduced()
    x = np.zeros(system.dofs.n)
    if Af.shape[0] == 0:
        return Solution(x, 0.0, system)
    if method == "direct":
        tol = 1e-12 if tol is None else tol
        lu = spla.splu(Af.tocsc())
        xf = lu.solve(bf)
        # one step of iterative refinement
        r = bf - Af @ xf
        xf = xf + lu.solve(r)
        res = np.linalg.norm(bf - Af @ xf) / max(np.linalg.norm(bf), 1e-300)
        if res > max(tol, 1e-10):
            log.warning("direct solve residual %.2e", res)
    elif method == "cg":
        tol = 1e-10 if tol is None else tol
        d = Af.diagonal()
        if np.any(d <= 0):
            raise np.linalg.LinAlgError("matrix is not SPD (non-positive diagonal)")
        M = sp.diags(1.0 / d)
        xf, info = spla.cg(Af, bf, rtol=tol, atol=0.0, M=M, maxiter=20 * Af.shape[0])
        if info != 0:
            raise RuntimeError(f"CG did not converge (info={info})")
    else:
        raise ValueError("method must be 'direct' or 'cg'")
    x[system.free] = xf
    energy = float(xf @ (Af @ xf))
    return Solution(x, energy, system)


def error_h1(solution: Solution | float, ref_seminorm_sq: float, tol: float = 1e-10):
    """``sqrt(|u|^2 - |u_h|^2)`` by Galerkin orthogonality, plus a record."""
    e = solution.energy if isinstance(solution, Solution) else float(solution)
    if e > ref_seminorm_sq + tol:
        raise ValueError(f"discrete energy {e:.12g} exceeds the reference {ref_seminorm_sq:.12g}")
    err = math.sqrt(max(ref_seminorm_sq - e, 0.0))
    return err, {"energy": e, "reference": ref_seminorm_sq, "error": err}


def _rescale(A):
    d = 1.0 / np.sqrt(A.diagonal())
    D = sp.diags(d) if sp.issparse(A) else np.diag(d)
    return D @ A @ D


def condition_number(A, rescale: bool = False, dense_cap: int = DENSE_CAP) -> float:
    """Spectral condition number of a symmetric positive definite matrix."""
    if sp.issparse(A):
        A = A.tocsr()
    if A.shape[0] == 0:
        raise ValueError("empty matrix")
    if rescale:
        if np.any((A.diagonal() if sp.issparse(A) else np.diag(A)) <= 0):
            raise np.linalg.LinAlgError("rescaling needs a positive diagonal")
        A = _rescale(A)
    n = A.shape[0]
    if n <= dense_cap:
        M = A.toarray() if sp.issparse(A) else np.asarray(A)
        ev = sla.eigvalsh(M)
        lo, hi = ev[0], ev[-1]
    else:
        A = sp.csc_matrix(A)
        hi = spla.eigsh(A, 1, which="LA", return_eigenvectors=False, tol=1e-8)[0]
        lu = spla.splu(A)
        op = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
        lo = 1.0 / spla.eigsh(op, 1, which="LA", return_eigenvectors=False, tol=1e-8)[0]
    if lo <= 0:
        raise np.linalg.LinAlgError("matrix is singular or indefinite")
    return float(hi / lo)


def block_condition(system: GlobalSystem, cid: int, rescale: bool = False,
                    harmonic_only: bool = True) -> float:
    """Condition number of one cell's stiffness on its free dofs.

    With ``harmonic_only`` the cell's interior functions (bubbles and
    enrichments, which decouple from the harmonic part) are left out.
    """
    lm = system.local[cid]
    m = system.dofs.cell_maps[cid]
    keep = ~system.dirichlet[m]
    if harmonic_only:
        nc = system.dofs.cell_count[cid]
        keep[len(m) - nc:] = False
    A = lm.A[np.ix_(keep, keep)]
    return condition_number(A, rescale)


@dataclass
class RunResult:
    r: int
    dofs: int
    energy: float
    error: float | None
    kappa_global: float | None
    kappa_block: float | None
    wall_ms: float


def solve_family(mesh: Mesh, p: int = 1, element_type: int = 2, params: KressParams = KressParams(),
                 f=1.0, enrich=None, method: str = "direct", tau: float = TAU,
                 cache: dict | None = None, cell_params=None) -> tuple:
    """Edge bases, local matrices, assembly and solve for one mesh."""
    eb = mesh_edge_bases(mesh, p, element_type, tau=tau)
    enrich = enrich or {}
    dofs = build_dof_map(mesh, p, eb, {c: len(v) for c, v in enrich.items()})
    local = local_systems(mesh, p, eb, element_type, params, f, enrich, cache, cell_params)
    system = assemble(mesh, local, dofs)
    system.local = dict(enumerate(local))
    return system, solve(system, method)


def run_level(mesh: Mesh, r: int, ref: float | None, p: int = 1, element_type: int = 2,
              params: KressParams = KressParams(), enrich=None, kappa: bool = False,
              rescale: bool = False, block_cell: int | None = None, method: str = "direct",
              cache=None, cell_params=None) -> RunResult:
    t0 = time.perf_counter()
    system, sol = solve_family(mesh, p, element_type, params, 1.0, enrich, method,
                               cache=cache, cell_params=cell_params)
    err = error_h1(sol, ref)[0] if ref is not None else None
    kg = kb = None
    if kappa:
        kg = condition_number(system.kappa_matrix(), rescale)
        if block_cell is not None:
            kb = block_condition(system, block_cell, rescale)
    wall = 1e3 * (time.perf_counter() - t0)
    return RunResult(r, int(system.free.size), sol.energy, err, kg, kb, wall)


# --- reference values ------------------------------------------------------------

def square_series(terms: int = 2000) -> float:
    """``|u|^2_{H^1}`` for -lap u = 1 on the unit square by its double sine series
    (odd m, n below ``2 * terms``)."""
    m = np.arange(1, 2 * terms, 2, dtype=float) ** 2
    M, N = m[:, None], m[None, :]
    return float(64.0 / math.pi**6 * np.sum(1.0 / (M * N * (M + N))))


def single_cell_mesh(points) -> Mesh:
    from .geometry.curves import Line
    from .geometry.mesh import MeshBuilder

    b = MeshBuilder()
    n = len(points)
    b.cell([Line(points[k], points[(k + 1) % n]) for k in range(n)])
    return b.build()


LSHAPE_CORNERS = [(-1.0, -1.0), (0.0, -1.0), (0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (-1.0, 1.0)]


def poisson_energy_bie(mesh: Mesh, params: KressParams = KressParams(q=7, n_per_edge=256),
                       route: str = "split") -> float:
    """``|u|^2_{H^1}`` for -lap u = 1, u = 0 on a one-cell domain, boundary integrals only.

    ``route="split"``: ``u = v + w`` with ``w = -|x|^2/4``, v harmonic with
    trace ``|x|^2/4``, and ``|u|^2 = |w|^2 - oint (dv/dn) v ds``, where
    ``|w|^2 = int |x|^2/4 dx`` is a moment. ``route="bubble"``: the energy
    of the zero-trace bubble about the centroid, as used for enrichments.
    """
    from .bie import solve_conjugate, trace_of_function
    from .geometry.grid import boundary_grid
    from .localspace import bubble_enrichment, poly_integral

    if len(mesh.cells) != 1:
        raise ValueError("expected a single-cell mesh")
    cell = mesh.cells[0]
    if route == "bubble":
        return bubble_enrichment(mesh, cell, 1.0, params)[3]
    if route != "split":
        raise ValueError("route must be 'split' or 'bubble'")
    grid = boundary_grid(mesh, cell, params)
    g = trace_of_function(grid, lambda p: 0.25 * (p[:, 0] ** 2 + p[:, 1] ** 2), lambda p: 0.5 * p)
    h = solve_conjugate(grid, g)
    ev = -grid.h * float(h.v @ h.dudsigma)
    w2 = poly_integral(grid, Poly2.from_dict({(2, 0): 0.25, (0, 2): 0.25}))
    return w2 - ev


def richardson(values, factor: float = 2.0, order: float | None = None) -> float:
    """Extrapolate a sequence computed at h, h/factor, h/factor^2, ...

    With ``order=None`` the rate is estimated from the last three values.
    """
    v = np.asarray(values, float)
    if len(v) < 2:
        raise ValueError("need at least two values")
    if order is None:
        if len(v) < 3:
            raise ValueError("rate estimation needs three values")
        d1, d2 = v[-2] - v[-3], v[-1] - v[-2]
        if d1 == 0 or d2 == 0 or d1 / d2 <= 1:
            return float(v[-1])
        order = math.log(d1 / d2) / math.log(factor)
    c = factor**order
    return float(v[-1] + (v[-1] - v[-2]) / (c - 1))
