"""Harmonic conjugates from Dirichlet data by a Nystrom method on graded grids.

For a harmonic ``u`` with trace ``g`` the conjugate trace ``v`` (mean zero on
the boundary) solves the second-kind equation

    v(x)/2 + int (dPhi/dn_y + 1) v ds = -int Phi dg/dt ds,

implemented in the corner-robust subtracted form

    int dPhi/dn_y (v(y) - v(x)) ds + int v ds = -int Phi dg/dt ds,

which holds pointwise at every boundary point, corners included. The
log-singular right-hand side uses Kress's product quadrature for the periodic
parameter; the subtracted double-layer integrand needs no diagonal value.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .geometry.grid import BoundaryGrid
from .polynomial import Poly2


@dataclass
class DirichletTrace:
    """Boundary values and tangential derivative (counter-clockwise) at grid nodes."""

    values: np.ndarray
    dtangent: np.ndarray

    def dsigma(self, grid: BoundaryGrid) -> np.ndarray:
        """Derivative with respect to the global grid parameter."""
        return self.dtangent * grid.speed

    def __add__(self, other):
        return DirichletTrace(self.values + other.values, self.dtangent + other.dtangent)

    def __sub__(self, other):
        return DirichletTrace(self.values - other.values, self.dtangent - other.dtangent)

    def __mul__(self, s):
        return DirichletTrace(self.values * s, self.dtangent * s)

    __rmul__ = __mul__


def trace_of_poly(grid: BoundaryGrid, p: Poly2) -> DirichletTrace:
    g = p.grad_eval(grid.pts)
    return DirichletTrace(p.eval(grid.pts), np.sum(g * grid.tangent, axis=1))


def trace_of_function(grid: BoundaryGrid, f, grad) -> DirichletTrace:
    """Trace of a smooth function given callables ``f(pts)`` and ``grad(pts) -> (..., 2)``."""
    g = np.asarray(grad(grid.pts))
    return DirichletTrace(np.asarray(f(grid.pts), float), np.sum(g * grid.tangent, axis=1))


def kress_log_weights(N: int) -> np.ndarray:
    """First column ``r`` of the circulant with ``int_0^{2pi} ln(4 sin^2((s-t)/2)) f(t) dt
    ~ sum_j r[(i-j) % N] f(t_j)`` on N equispaced nodes (N even)."""
    if N % 2:
        raise ValueError("Kress product quadrature needs an even node count")
    m = N // 2
    A = np.zeros(N)
    l = np.arange(1, m)
    A[l] = -(2 * math.pi / m) / l / 2
    A[N - l] = A[l]
    A[m] = -math.pi / m**2
    return np.real(np.fft.fft(A))


def _circulant(col):
    N = len(col)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return col[idx]


class NystromSolver:
    """Factorized Nystrom system for one grid; reusable for many Dirichlet data."""

    def __init__(self, grid: BoundaryGrid, corner_correction: bool = True):
        self.grid = grid
        N, h = grid.n, grid.h
        Dx, Dy = grid.differences()
        r2 = Dx * Dx + Dy * Dy
        np.fill_diagonal(r2, 1.0)
        zero = r2 == 0.0
        r2[zero] = 1.0
        nu = grid.nu
        # w_j dPhi/dn(y_j) ;  dPhi/dn_y = -(1/2pi) (y-x).n / |y-x|^2
        WK = -(h / (2 * math.pi)) * (Dx * nu[None, :, 0] + Dy * nu[None, :, 1]) / r2
        WK[zero] = 0.0
        np.fill_diagonal(WK, 0.0)
        # single layer: (1/4pi)[R + h L] with L the smooth remainder of ln|x-y|^2
        ds = grid.sigma[None, :] - grid.sigma[:, None]
        s2 = 4.0 * np.sin(ds / 2) ** 2
        np.fill_diagonal(s2, 1.0)
        r2[zero] = 1e-300
        Lr = np.log(r2 / s2)
        del s2, ds
        np.fill_diagonal(Lr, np.log(np.maximum(grid.speed ** 2, 1e-300)))
        Rlog = _circulant(kress_log_weights(N)) / (4 * math.pi)
        S = Rlog + (h / (4 * math.pi)) * Lr
        del Lr, r2
        if corner_correction:
            _corner_corrections(grid, WK, S, Rlog)
        del Rlog
        self.S = S
        w = grid.weights
        M = WK + w[None, :]
        M[np.diag_indices(N)] = w - WK.sum(axis=1)
        self.lu = sla.lu_factor(M, check_finite=False)
        del M, WK
        grid.clear_cache()

    def rhs(self, dgds: np.ndarray) -> np.ndarray:
        return self.S @ dgds

    def solve(self, dgds: np.ndarray) -> np.ndarray:
        """Conjugate traces for tangential data ``dg/dsigma`` (shape (N,) or (N, m))."""
        v = sla.lu_solve(self.lu, self.S @ dgds, check_finite=False)
        w = self.grid.weights
        mean = (w @ v) / w.sum()
        return v - mean


def _gauss_panels(breaks, m=16):
    x, w = np.polynomial.legendre.leggauss(m)
    a, b = np.asarray(breaks[:-1]), np.asarray(breaks[1:])
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return (mid[:, None] + half[:, None] * x).ravel(), (half[:, None] * w).ravel()


def _corner_rule(n):
    """Panels in the distance-from-corner variable a in (0, 1), geometric near a = 0."""
    a0 = 0.5 / n / 64
    br = [0.0]
    a = a0
    while a < 0.5:
        br.append(a)
        a *= 1.2
    br.extend(np.linspace(0.5, 1.0, 9))
    return _gauss_panels(br)


def lagrange_matrix(nodes, x, p, spread=0.25):
    """Local degree-``p`` Lagrange interpolation from sorted ``nodes`` to ``x``.

    Stencils are grown outward from each target, skipping nodes that sit
    closer to a node already taken than both ``spread`` times their distance
    to the target and half the node spacing at the target. On strongly
    clustered nodes this drops redundant points and keeps the Lebesgue
    constant moderate, while uniformly spaced stretches are kept whole.
    """
    nodes = np.asarray(nodes, float)
    n = len(nodes)
    p = min(p, n - 1)
    out = np.zeros((len(x), n))
    gaps = np.diff(nodes)
    for i, xx in enumerate(np.asarray(x, float)):
        order = np.argsort(np.abs(nodes - xx), kind="stable")
        # node spacing at the target
        k = int(np.clip(np.searchsorted(nodes, xx), 1, n - 1))
        local = gaps[k - 1]
        pick = []
        for j in order:
            d = abs(nodes[j] - xx)
            if pick and np.min(np.abs(nodes[pick] - nodes[j])) < min(spread * d, 0.5 * local):
                continue
            pick.append(j)
            if len(pick) == p + 1:
                break
        st = nodes[pick]
        for jj, j in enumerate(pick):
            others = np.delete(st, jj)
            out[i, j] = np.prod((xx - others) / (st[jj] - others))
    return out


@functools.lru_cache(maxsize=64)
def _half_interp_cached(nb, q, p):
    a, _ = _corner_rule(nb)
    P = _half_interp(nb, a, q, p)
    P.setflags(write=False)
    return P


def _half_interp(nb, a, q, p):
    """Interpolation matrix from an edge's node values to fine points at corner
    distance ``a`` in the graded variable (node j sits at a_j = (j + 1/2)/nb).

    Interpolation runs in the curve-parameter distance ``s = w(a)`` from the
    corner. Traces smooth along the curve are smooth in ``s``, whereas in the
    graded variable the sigmoid's complex singularities limit polynomial
    accuracy; the clustering of nodes in ``s`` is handled by the stencil
    thinning in ``lagrange_matrix``.
    """
    from .geometry.grid import kress_map

    aj = (np.arange(nb) + 0.5) / nb
    return lagrange_matrix(kress_map(aj, q)[0], kress_map(a, q)[0], p)


def _corner_corrections(grid: BoundaryGrid, WK, S, Rlog, p_interp=21, reach=0.375):
    """Replace near-corner adjacent-edge entries of both layer operators by
    product integration on a geometrically refined rule.

    For a node x close to a corner, both kernels restricted to the neighbouring
    edge vary on the scale dist(x, corner), which the graded midpoint nodes
    only resolve asymptotically. For the nodes within ``reach`` (as a fraction
    of the graded parameter) of each corner on either side, that edge's contribution is integrated on a fine
    rule with the density interpolated from the edge's own nodes.
    """
    from .geometry.grid import kress_map

    E = len(grid.counts)
    h = grid.h
    for k in range(E):
        sl_a = grid.edge_slice(k)
        na = grid.counts[k]
        m = max(1, int(reach * na))
        for at_end in (False, True):
            # targets: nodes of edge k next to the corner; sources: neighbour edge b
            idx = np.arange(sl_a.start, sl_a.stop)
            tgt = idx[na - m:] if at_end else idx[:m]
            b = (k + 1) % E if at_end else (k - 1) % E
            if b == k:
                continue
            nb = grid.counts[b]
            sl_b = grid.edge_slice(b)
            curve, o = grid.curves[b], grid.orient[b]
            a, wa = _corner_rule(nb)
            # corner at start of b's traversal when at_end, else at its end
            u = a if at_end else 1.0 - a
            w_, wc_, dw = kress_map(u, grid.q)
            t = w_ if o > 0 else wc_
            s_dist, _, _ = kress_map(a, grid.q)
            if at_end:
                end = 0 if o > 0 else 1
            else:
                end = 1 if o > 0 else 0
            off = curve.delta(s_dist, end)
            V = curve.velocity(t) * (dw if o > 0 else -dw)[:, None]  # d y / d u
            nu = np.stack([V[:, 1], -V[:, 0]], axis=1)
            X = grid.corner_off[tgt]
            Dx = off[None, :, 0] - X[:, None, 0]
            Dy = off[None, :, 1] - X[:, None, 1]
            r2 = Dx * Dx + Dy * Dy
            Fdl = -(1.0 / (2 * math.pi)) * (Dx * nu[None, :, 0] + Dy * nu[None, :, 1]) / r2 * wa
            # smooth remainder of the Kress splitting only; the log-sine part
            # stays with the global product rule. d sigma = n_b h du
            tau = h * (sl_b.start + nb * u)
            dsig = grid.sigma[tgt][:, None] - tau[None, :]
            # the density dg/dsigma carries the grading factor dt/du, which is
            # not smooth in the interpolation variable: interpolate dg/dt.
            Fsl = (np.log(r2) - np.log(4.0 * np.sin(dsig / 2) ** 2)) * (np.abs(dw) / (4 * math.pi)) * wa
            P = _half_interp_cached(nb, grid.q, p_interp)
            if not at_end:
                P = P[:, ::-1]  # node columns ordered along traversal, corner last
            ub = (np.arange(nb) + 0.5) / nb
            dtdsig = np.abs(kress_map(ub, grid.q)[2]) / (nb * h)
            cols = np.arange(sl_b.start, sl_b.stop)
            WK[np.ix_(tgt, cols)] = Fdl @ P
            S[np.ix_(tgt, cols)] = Rlog[np.ix_(tgt, cols)] + (Fsl @ P) / dtdsig[None, :]


@dataclass
class HarmonicRep:
    """A harmonic function on a cell held as boundary traces of u and its conjugate."""

    grid: BoundaryGrid
    u: np.ndarray
    v: np.ndarray
    dudsigma: np.ndarray

    def dvdsigma(self) -> np.ndarray:
        return spectral_derivative(self.v)

    def normal_derivative(self) -> np.ndarray:
        """du/dn at the nodes, equal to the tangential derivative of v."""
        return self.dvdsigma() / self.grid.speed

    def flux_pairing(self, dwdsigma) -> float:
        """``oint (du/dn) w ds`` for a continuous trace w, via ``-oint v dw/dt ds``."""
        return -self.grid.h * float(self.v @ dwdsigma)


def spectral_derivative(f: np.ndarray) -> np.ndarray:
    """d/dsigma of a periodic node sequence by FFT (Nyquist mode dropped)."""
    N = len(f)
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = 0.0
    return np.real(np.fft.ifft(1j * k * np.fft.fft(f)))


def solve_conjugate(grid: BoundaryGrid, g: DirichletTrace, solver: NystromSolver = None) -> HarmonicRep:
    """Conjugate trace of the harmonic extension of ``g`` with zero boundary mean."""
    if solver is None:
        solver = NystromSolver(grid)
    dg = g.dsigma(grid)
    v = solver.solve(dg)
    if not np.all(np.isfinite(v)):
        raise np.linalg.LinAlgError("Nystrom solve produced non-finite values")
    return HarmonicRep(grid, np.asarray(g.values, float), v, dg)


def normal_derivative(h: HarmonicRep) -> np.ndarray:
    return h.normal_derivative()


def boundary_functional(grid: BoundaryGrid, f, g) -> float:
    """``oint f g ds`` by the grid rule."""
    f = np.asarray(f, float)
    g = np.asarray(g, float)
    if f.shape[0] != grid.n or g.shape[0] != grid.n:
        raise ValueError("node arrays do not conform to the grid")
    return float(np.sum(grid.weights * f * g))


def cauchy_eval(h: HarmonicRep, z, k: int = 0, delta: float = 0.05):
    """k-th derivative of ``w = u + i v`` at interior points ``z`` by Cauchy's formula.

    ``z`` may be a complex scalar/array or real ``(..., 2)`` points. Raises
    ``ValueError`` for points outside the cell or closer than ``delta`` times
    the cell diameter to the boundary.
    """
    grid = h.grid
    zc = _to_complex(z)
    xi = grid.pts[:, 0] + 1j * grid.pts[:, 1]
    dxi = grid.dx[:, 0] + 1j * grid.dx[:, 1]
    w = h.u + 1j * h.v
    flat = np.atleast_1d(zc).ravel()
    diff = xi[None, :] - flat[:, None]
    dist = np.min(np.abs(diff), axis=1)
    hk = grid.diameter
    if np.any(dist < delta * hk):
        raise ValueError("evaluation point too close to the boundary")
    wind = np.real(grid.h * np.sum(dxi[None, :] / diff, axis=1) / (2j * math.pi))
    if np.any(np.abs(wind - 1) > 1e-3):
        raise ValueError("evaluation point outside the cell")
    if k == 0:
        # barycentric form: ratio of two Cauchy integrals
        num = np.sum(w * dxi / diff, axis=1)
        den = np.sum(dxi / diff, axis=1)
        out = num / den
    else:
        out = math.factorial(k) * grid.h * np.sum(w * dxi / diff ** (k + 1), axis=1) / (2j * math.pi)
    out = out.reshape(np.shape(zc))
    return out if np.ndim(zc) else complex(out)


def gradient_from_cauchy(h: HarmonicRep, z, delta=0.05):
    """(u_x, u_y) from w'(z) = u_x - i u_y."""
    d = cauchy_eval(h, z, 1, delta)
    return np.real(d), -np.imag(d)


def hessian_from_cauchy(h: HarmonicRep, z, delta=0.05):
    """(u_xx, u_xy, u_yy) from w''(z) = u_xx - i u_xy and u_yy = -u_xx."""
    d = cauchy_eval(h, z, 2, delta)
    return np.real(d), -np.imag(d), -np.real(d)


def _to_complex(z):
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return z
    if z.shape and z.shape[-1] == 2:
        return z[..., 0] + 1j * z[..., 1]
    return z.astype(complex)


def dump_csv(h: HarmonicRep, path):
    """Diagnostic dump of nodes, u, v and du/dn."""
    g = h.grid
    dn = h.normal_derivative()
    data = np.column_stack([g.pts, h.u, h.v, dn])
    np.savetxt(path, data, delimiter=",", header="x,y,u,v,dudn", comments="")
