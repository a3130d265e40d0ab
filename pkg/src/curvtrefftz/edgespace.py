"""Edge trace spaces: equilateral edge frames, hierarchical spanning sets and
rank-revealing selection of a basis from the edge Gram matrix.

A Type 2 trace space on an edge e is the restriction of the bivariate
polynomials of degree <= p to e. Its dimension depends on whether e lies on a
low-degree algebraic curve, so a basis is picked from a spanning set by
pivoted elimination on the Gram matrix rather than decided symbolically.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .geometry.curves import Curve
from .polynomial import Poly2

SQ3 = math.sqrt(3.0)
R_CW = np.array([[0.0, 1.0], [-1.0, 0.0]])
P_MAX = 6
TAU = 1e-12


@dataclass(frozen=True, eq=False)
class EdgeFrame:
    """Equilateral triangle ``z0, z1, z2`` erected on an edge chord."""

    z0: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    h: float

    @property
    def R(self) -> np.ndarray:
        return R_CW

    @property
    def vertices(self):
        return (self.z0, self.z1, self.z2)

    @functools.cached_property
    def bary(self) -> tuple:
        """``(l0, l1, l2)`` as affine Poly2 centred near the edge midpoint."""
        z = self.vertices
        c = tuple(0.5 * (self.z0 + self.z1))
        out = []
        for j in range(3):
            n = R_CW @ (z[(j - 1) % 3] - z[(j + 1) % 3]) / (0.5 * SQ3 * self.h**2)
            # 1 - (x - z_j).n  expanded about c
            c0 = 1.0 - float((np.asarray(c) - z[j]) @ n)
            out.append(Poly2.affine(c0, -n[0], -n[1], c))
        return tuple(out)

    def to_reference(self, x):
        """Map points to barycentric coordinates ``(..., 3)``."""
        x = np.asarray(x, float)
        return np.stack([b.eval(x) for b in self.bary], axis=-1)


def edge_frame(z0, z1) -> EdgeFrame:
    z0 = np.asarray(z0, float)
    z1 = np.asarray(z1, float)
    h = float(np.linalg.norm(z1 - z0))
    if h == 0.0:
        raise ValueError("edge frame needs distinct endpoints")
    z2 = 0.5 * (z1 + z0) - R_CW @ (SQ3 * (z1 - z0) / 2)
    return EdgeFrame(z0, z1, z2, h)


def cartesian_frame(z0, z1) -> tuple:
    """Cartesian-like coordinates ``(lt0, lt1, lt2)`` on the edge chord."""
    z0 = np.asarray(z0, float)
    z1 = np.asarray(z1, float)
    d = z1 - z0
    h2 = float(d @ d)
    if h2 == 0.0:
        raise ValueError("edge frame needs distinct endpoints")
    c = tuple(0.5 * (z0 + z1))
    cm = np.asarray(c)
    Rd = R_CW @ d
    lt0 = Poly2.affine(float((z1 - cm) @ d) / h2, -d[0] / h2, -d[1] / h2, c)
    lt1 = Poly2.affine(float((cm - z0) @ d) / h2, d[0] / h2, d[1] / h2, c)
    lt2 = Poly2.affine(float((z1 - cm) @ Rd) / h2, -Rd[0] / h2, -Rd[1] / h2, c)
    return lt0, lt1, lt2


def frame_for_edge(curve: Curve, reverse: bool = False) -> EdgeFrame:
    """Frame with ``z0`` at the curve start (or end when ``reverse``)."""
    a, b = curve.start, curve.end
    return edge_frame(b, a) if reverse else edge_frame(a, b)


# --- hierarchical spanning sets ---------------------------------------------

@dataclass(frozen=True)
class Generator:
    """One spanning function as a recipe on barycentric coordinates.

    kind ``vertex``: l_i. kind ``edge``: l_i l_j k_d(l_i - l_j), with k_d the
    monic multiple of P'_{d-1}. kind ``bubble``: l0 l1 l2 P_a(l1 - l0)
    P_b(2 l2 - 1). P_n are Legendre polynomials.
    """

    kind: str
    degree: int
    idx: tuple
    scale: float
    label: str


@functools.lru_cache(maxsize=None)
def _kernel_coef(d):
    """Power coefficients (low first) of the degree d - 2 edge kernel: P'_{d-1}
    normalised to leading coefficient 1, so d = 2, 3 give 1 and x."""
    c = np.polynomial.Legendre.basis(d - 1).deriv().convert(kind=np.polynomial.Polynomial).coef
    return tuple(c / c[-1])


@functools.lru_cache(maxsize=None)
def _legendre_coef(n):
    return tuple(np.polynomial.Legendre.basis(n).convert(kind=np.polynomial.Polynomial).coef)


def _horner(coef, x):
    """Evaluate a power series at an array or a Poly2."""
    out = 0.0 * x + coef[-1]
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def _edge_kernel(d, x):
    return _horner(_kernel_coef(d), x)


def _gen_eval_bary(g: Generator, L):
    """Evaluate an unscaled generator at barycentric points ``L (..., 3)``."""
    l0, l1, l2 = L[..., 0], L[..., 1], L[..., 2]
    ll = (l0, l1, l2)
    if g.kind == "vertex":
        return ll[g.idx[0]]
    if g.kind == "edge":
        i, j = g.idx
        return ll[i] * ll[j] * _edge_kernel(g.degree, ll[i] - ll[j])
    a, b = g.idx
    return l0 * l1 * l2 * _horner(_legendre_coef(a), l1 - l0) * _horner(_legendre_coef(b), 2 * l2 - 1)


def _triangle_lattice(m=240):
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = i + j <= m
    l0 = i[keep] / m
    l1 = j[keep] / m
    return np.stack([l0, l1, 1 - l0 - l1], axis=-1)


def _unit_max_scale(g: Generator) -> float:
    L = _triangle_lattice()
    v = np.abs(_gen_eval_bary(g, L))
    k = int(np.argmax(v))
    # polish the lattice maximum with a few Newton-free local refinements
    best, x = v[k], L[k, :2].copy()
    step = 1.0 / 240
    for _ in range(40):
        cand = x + step * np.array([[0, 0], [1, 0], [-1, 0], [0, 1], [0, -1], [1, -1], [-1, 1]])
        cand = cand[(cand[:, 0] >= 0) & (cand[:, 1] >= 0) & (cand.sum(1) <= 1)]
        Lc = np.column_stack([cand, 1 - cand.sum(1)])
        vc = np.abs(_gen_eval_bary(g, Lc))
        kk = int(np.argmax(vc))
        if vc[kk] > best:
            best, x = vc[kk], cand[kk]
        else:
            step /= 2
    return 1.0 / best


# the displayed cubic set; these scalings are kept even where the maximum is
# not 1 (the cubic edge functions peak at 1/4)
_P3_SCALE = {("edge", 2): 4.0, ("edge", 3): 1.5 * SQ3, ("bubble", 3): 27.0}


@functools.lru_cache(maxsize=None)
def _generators(p: int) -> tuple:
    gens = [Generator("vertex", 1, (i,), 1.0, f"l{i}") for i in range(3)]
    for d in range(2, p + 1):
        for (i, j) in ((1, 2), (0, 2), (0, 1)):
            g = Generator("edge", d, (i, j), 1.0, "")
            s = _P3_SCALE.get(("edge", d)) or _unit_max_scale(g)
            if d == 2:
                lab = f"4*l{i}*l{j}"
            elif d == 3:
                lab = f"(3*sqrt(3)/2)*l{i}*l{j}*(l{i}-l{j})"
            else:
                lab = f"{s:.6g}*l{i}*l{j}*dP{d - 1}(l{i}-l{j})"
            gens.append(Generator("edge", d, (i, j), s, lab))
        for a in range(d - 2):
            b = d - 3 - a
            g = Generator("bubble", d, (a, b), 1.0, "")
            s = _P3_SCALE.get(("bubble", d)) if d == 3 else _unit_max_scale(g)
            lab = "27*l0*l1*l2" if d == 3 else f"{s:.6g}*l0*l1*l2*P{a}(l1-l0)*P{b}(2*l2-1)"
            gens.append(Generator("bubble", d, (a, b), s, lab))
    return tuple(gens)


def _realize(g: Generator, ll) -> Poly2:
    if g.kind == "vertex":
        return ll[g.idx[0]] * g.scale
    if g.kind == "edge":
        i, j = g.idx
        return ll[i] * ll[j] * _horner(_kernel_coef(g.degree), ll[i] - ll[j]) * g.scale
    a, b = g.idx
    return ll[0] * ll[1] * ll[2] * _horner(_legendre_coef(a), ll[1] - ll[0]) * \
        _horner(_legendre_coef(b), ll[2] * 2.0 - 1.0) * g.scale


@dataclass(frozen=True, eq=False)
class SpanningSet:
    functions: tuple
    degrees: tuple
    labels: tuple

    def __len__(self):
        return len(self.functions)


def hierarchical_spanning_set(frame, p: int, coords: str = "equilateral") -> SpanningSet:
    """All ``C(p+2, 2)`` hierarchical functions for degree ``p``.

    ``frame`` is an :class:`EdgeFrame`; with ``coords="cartesian"`` the same
    recipes are applied to the cartesian-like coordinates of its chord.
    """
    if not 1 <= p <= P_MAX:
        raise ValueError(f"p must lie in 1..{P_MAX}")
    if coords == "equilateral":
        ll = frame.bary
    elif coords == "cartesian":
        ll = cartesian_frame(frame.z0, frame.z1)
    else:
        raise ValueError("coords must be 'equilateral' or 'cartesian'")
    gens = _generators(p)
    return SpanningSet(tuple(_realize(g, ll) for g in gens), tuple(g.degree for g in gens),
                       tuple(g.label for g in gens))


# --- Gram matrices and selection --------------------------------------------

def edge_quadrature(curve: Curve, n: int = 64):
    """Gauss-Legendre points, arc-length weights and the edge length."""
    t, w = np.polynomial.legendre.leggauss(n)
    t, w = 0.5 * (t + 1), 0.5 * w
    V = curve.velocity(t)
    ds = w * np.hypot(V[:, 0], V[:, 1])
    return curve.position(t), ds, float(ds.sum())


def edge_gram(functions, curve: Curve, n: int = 64, normalize: bool = True) -> np.ndarray:
    """``m_ij = int_e b_i b_j ds``, divided by the edge length if ``normalize``."""
    X, ds, L = edge_quadrature(curve, n)
    B = np.array([f.eval(X) for f in functions]).reshape(len(functions), -1)
    M = (B * ds) @ B.T
    M = 0.5 * (M + M.T)
    return M / L if normalize else M


def gecp_select(M, tau: float = TAU) -> list:
    """Pivot indices of symmetric complete-pivoting elimination on a PSD matrix.

    Pivots on the largest remaining diagonal entry and subtracts the rank-one
    update until that entry drops to ``tau`` or below.
    """
    M = np.array(M, float, copy=True)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("gecp_select needs a square matrix")
    n = M.shape[0]
    index = []
    active = np.ones(n, bool)
    while len(index) < n:
        d = np.where(active, np.diag(M), -np.inf)
        k = int(np.argmax(d))
        if not d[k] > tau:
            break
        index.append(k)
        col = M[:, k].copy()
        M -= np.outer(col, col) / col[k]
        active[k] = False
    return index


@dataclass(frozen=True, eq=False)
class EdgeBasis:
    """A basis of the trace space on one edge, in the edge's own frame.

    ``functions[0]`` and ``functions[1]`` are the endpoint functions for
    ``frame.z0`` and ``frame.z1`` (Type 2), or their parametric analogues
    (Type 1). Traces are evaluated through :meth:`trace` in the curve
    parameter, so both types share one interface.
    """

    frame: EdgeFrame
    p: int
    kept_indices: tuple
    functions: tuple
    labels: tuple
    variant: str = "plain"
    coords: str = "equilateral"
    kind: str = "type2"
    curve: Curve | None = None
    reverse: bool = False
    pivots: tuple = ()  # GECP pivot order, as indices into the candidate list

    def __len__(self):
        return len(self.functions)

    def trace(self, t, j):
        """Value of basis function ``j`` at curve parameter(s) ``t``."""
        f = self.functions[j]
        if self.kind == "type2":
            return f.eval(self.curve.position(np.asarray(t, float)))
        return f(_type1_param(self.curve, np.asarray(t, float), self.reverse))

    def dtrace_dt(self, t, j):
        """Derivative of ``trace`` along the curve parameter."""
        t = np.asarray(t, float)
        f = self.functions[j]
        if self.kind == "type2":
            g = f.grad_eval(self.curve.position(t))
            return np.sum(g * self.curve.velocity(t), axis=-1)
        s, dsdt = _type1_param(self.curve, t, self.reverse, deriv=True)
        return f.deriv(s) * dsdt


def build_edge_basis(curve: Curve, p: int, variant: str = "plain", coords: str = "equilateral",
                     reverse: bool = False, tau: float = TAU, full_set: bool = False,
                     n_quad: int = 64) -> EdgeBasis:
    """Type 2 edge basis: l0, l1 plus GECP-selected functions.

    ``reverse`` puts ``z0`` at the curve end. ``full_set`` runs selection on
    the whole spanning set instead of the set without l0, l1; the endpoint
    functions are kept in either case.
    """
    if variant not in ("plain", "rescaled"):
        raise ValueError("variant must be 'plain' or 'rescaled'")
    frame = frame_for_edge(curve, reverse)
    S = hierarchical_spanning_set(frame, p, coords)
    first = 0 if full_set else 2
    cand = list(range(first, len(S)))
    M = edge_gram([S.functions[i] for i in cand], curve, n_quad)
    if variant == "rescaled":
        # functions with a negligible trace (l2 on a straight edge) cannot be
        # rescaled; zero them so they are never selected
        live = np.diag(M) > tau
        d = np.where(live, np.sqrt(np.abs(np.diag(M))), 1.0)
        M = np.where(np.outer(live, live), M / np.outer(d, d), 0.0)
        # exact unit diagonal, so the first pivot is the first function (ties
        # go to the lowest index) rather than a rounding accident
        M[np.diag_indices_from(M)] = live.astype(float)
    piv = gecp_select(M, tau)
    picked = [cand[i] for i in piv]
    chosen = [0, 1] + [i for i in picked if i >= 2]
    # the hierarchical structure puts endpoint functions first, the others in pivot order
    return EdgeBasis(frame, p, tuple(chosen), tuple(S.functions[i] for i in chosen),
                     tuple(S.labels[i] for i in chosen), variant, coords, "type2", curve, reverse,
                     tuple(int(i) for i in piv))


# --- Type 1 (parametric) edge spaces -----------------------------------------

def _type1_param(curve: Curve, t, reverse=False, deriv=False):
    """Normalised arc-length coordinate of curve parameter ``t`` (from z0)."""
    x, w = np.polynomial.legendre.leggauss(32)
    x, w = 0.5 * (x + 1), 0.5 * w
    t = np.atleast_1d(np.asarray(t, float))
    # s(t) = int_0^t |x'| / L
    tt = t[:, None] * x[None, :]
    V = curve.velocity(tt.ravel()).reshape(tt.shape + (2,))
    sp = np.hypot(V[..., 0], V[..., 1])
    s = (sp * w).sum(1) * t
    V1 = curve.velocity(x)
    L = float((np.hypot(V1[:, 0], V1[:, 1]) * w).sum())
    s = s / L
    if deriv:
        Vt = curve.velocity(t)
        dsdt = np.hypot(Vt[:, 0], Vt[:, 1]) / L
        return (1 - s, -dsdt) if reverse else (s, dsdt)
    return 1 - s if reverse else s


class _Poly1:
    """Polynomial in one variable on [0, 1] (numpy coefficient order, low first)."""

    def __init__(self, coef, label):
        self.p = np.polynomial.Polynomial(coef)
        self.label = label

    def __call__(self, s):
        return self.p(s)

    def deriv(self, s):
        return self.p.deriv()(s)


def _type1_functions(p: int):
    fns = [_Poly1([1.0, -1.0], "1-s"), _Poly1([0.0, 1.0], "s")]
    for d in range(2, p + 1):
        # s(1-s) P'_{d-1}(2s-1), scaled to unit maximum
        x = np.polynomial.Polynomial([-1.0, 2.0])
        poly = np.polynomial.Polynomial([0.0, 1.0, -1.0]) * np.polynomial.Polynomial(_kernel_coef(d))(x)
        ss = np.linspace(0, 1, 2001)
        poly = poly / np.abs(poly(ss)).max()
        fns.append(_Poly1(poly.coef, f"b{d}(s)"))
    return fns


def build_type1_basis(curve: Curve, p: int = 1, reverse: bool = False) -> EdgeBasis:
    """Polynomials of degree <= p in normalised arc length (dimension p + 1)."""
    if not 1 <= p <= P_MAX:
        raise ValueError(f"p must lie in 1..{P_MAX}")
    frame = frame_for_edge(curve, reverse)
    fns = _type1_functions(p)
    return EdgeBasis(frame, p, tuple(range(p + 1)), tuple(fns), tuple(f.label for f in fns),
                     "plain", "arclength", "type1", curve, reverse)


# --- dimension oracle ---------------------------------------------------------

def dim_ppe_expected(p: int, m: int | None = None) -> int:
    """Dimension of the degree-``p`` trace space on an edge of an irreducible
    degree-``m`` algebraic curve (``m=None``: not on any such curve)."""
    if p < 0:
        raise ValueError("p must be non-negative")
    full = int(comb(p + 2, 2, exact=True))
    if m is None or m > p:
        return full
    return full - int(comb(p - m + 2, 2, exact=True))
