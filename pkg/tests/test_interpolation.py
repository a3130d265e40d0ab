import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from curvtrefftz.bie import NystromSolver, trace_of_poly
from curvtrefftz.edgespace import build_edge_basis
from curvtrefftz.geometry import CircularArc, KressParams, Line, boundary_grid, mesh_generate
from curvtrefftz.interpolation import (H12Kernel, TestFunction, cell_interp_error, edge_project,
                                       global_interp_error, h12_inner, interior_project,
                                       interp_error_study, interpolate_cell, test_function)
from curvtrefftz.interpolation import _boundary_trace
from curvtrefftz.localspace import (bubble_multi_indices, build_local_space, local_stiffness,
                                    mesh_edge_bases, poly_harmonic_integral, poly_integral)
from curvtrefftz.polynomial import Poly2, anti_laplacian

UNIT = Line((0.0, 0.0), (1.0, 0.0))
ARC = CircularArc((0.0, 0.0), 1.0, 0.3, 1.5)
PRM = KressParams(7, 64)


def test_h12_constant_is_length():
    e = Line((0.0, 0.0), (2.0, 1.0))
    one = lambda t: np.ones_like(t)
    assert h12_inner(e, one, one) == pytest.approx(math.sqrt(5.0), rel=1e-13)


def test_h12_linear_closed_form():
    assert h12_inner(UNIT, lambda t: t, lambda t: t) == pytest.approx(4 / 3, abs=1e-12)


@given(a=st.floats(-2, 2), b=st.floats(-2, 2), k=st.integers(1, 4))
@settings(max_examples=20)
def test_h12_bilinear(a, b, k):
    K = H12Kernel(ARC)
    f = lambda t: np.sin(k * t)
    g = lambda t: t**k
    h = lambda t: np.cos(t) + t
    lhs = K.inner(lambda t: a * f(t) + b * g(t), h)
    rhs = a * K.inner(f, h) + b * K.inner(g, h)
    assert lhs == pytest.approx(rhs, abs=1e-10 * (1 + abs(a) + abs(b)))


def test_h12_gram_symmetric_positive():
    b = build_edge_basis(ARC, 3)
    G = H12Kernel(ARC).gram([lambda t, j=j: b.trace(t, j) for j in range(len(b))])
    assert np.allclose(G, G.T)
    assert np.linalg.eigvalsh(G)[0] > 0


@pytest.mark.parametrize("s", [0.1, 3.0])
def test_h12_scaling(s):
    big = CircularArc((0.2 * s, -0.1 * s), s, 0.3, 1.5)
    small = CircularArc((0.2, -0.1), 1.0, 0.3, 1.5)
    fns = [lambda t: t, lambda t: np.cos(3 * t), lambda t: t * (1 - t)]

    def parts(curve):
        G = H12Kernel(curve).gram(fns)
        t, w = np.polynomial.legendre.leggauss(64)
        t, w = 0.5 * (t + 1), 0.5 * w
        V = curve.velocity(t)
        F = np.array([f(t) for f in fns])
        L2 = (F * w * np.hypot(V[:, 0], V[:, 1])) @ F.T
        return L2, G - L2

    L2a, Sa = parts(small)
    L2b, Sb = parts(big)
    assert np.allclose(L2b, s * L2a, rtol=1e-12, atol=1e-14)
    assert np.allclose(Sb, Sa, rtol=1e-9, atol=1e-11)


def test_projection_commutes_with_scaling_on_members():
    P = Poly2.from_dict({(2, 0): 1.0, (1, 1): -0.5, (0, 1): 2.0})
    t = np.linspace(0, 1, 11)
    for s in (0.1, 4.0):
        big = CircularArc((0.0, 0.0), s, 0.3, 1.5)
        Ps = Poly2.from_dict({(2, 0): 1 / s**2, (1, 1): -0.5 / s**2, (0, 1): 2.0 / s})
        b1, bs = build_edge_basis(ARC, 2), build_edge_basis(big, 2)
        c1 = edge_project(lambda tt: P.eval(ARC.position(tt)), ARC, b1)
        cs = edge_project(lambda tt: Ps.eval(big.position(tt)), big, bs)
        q1 = sum(c1[j] * b1.trace(t, j) for j in range(len(b1)))
        qs = sum(cs[j] * bs.trace(t, j) for j in range(len(bs)))
        assert np.abs(q1 - qs).max() < 1e-9


def test_edge_linear_on_line():
    b = build_edge_basis(UNIT, 1)
    c = edge_project(lambda t: 2 + 3 * t, UNIT, b)
    t = np.linspace(0, 1, 9)
    assert np.allclose(c[0] * b.trace(t, 0) + c[1] * b.trace(t, 1), 2 + 3 * t, atol=1e-14)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_edge_reproduces_members(p):
    b = build_edge_basis(ARC, p)
    rng = np.random.default_rng(p)
    coef = rng.standard_normal(len(b))
    v = lambda t: sum(coef[j] * b.trace(t, j) for j in range(len(b)))
    c = edge_project(v, ARC, b)
    t = np.linspace(0, 1, 32)
    assert np.abs(sum(c[j] * b.trace(t, j) for j in range(len(b))) - v(t)).max() < 1e-10


def test_edge_orthogonality_rez3_arc():
    b = build_edge_basis(ARC, 3)
    v = lambda t: test_function("rez3").f(ARC.position(t))
    c = edge_project(v, ARC, b)
    K = H12Kernel(ARC)
    q = lambda t: sum(c[j] * b.trace(t, j) for j in range(len(b)))
    for j in range(2, len(b)):
        assert abs(K.inner(lambda t: v(t) - q(t), lambda t, j=j: b.trace(t, j))) < 1e-10
    assert q(np.array([0.0, 1.0])) == pytest.approx(v(np.array([0.0, 1.0])), abs=1e-13)


def square_grid():
    m = mesh_generate("square", 1)
    return m, boundary_grid(m, m.cells[0], PRM)


def test_interior_zero_and_identity():
    _, g = square_grid()
    assert interior_project(Poly2.const(0.0), g, 3).is_zero()
    assert interior_project(None, g, 3).is_zero()
    assert interior_project(Poly2.const(2.0), g, 1).is_zero()
    P = Poly2.from_dict({(0, 0): 1.0, (1, 0): -2.0, (0, 1): 0.5})
    assert interior_project(P, g, 3).allclose(P, rtol=1e-12, atol=1e-12)
    with pytest.raises(TypeError):
        interior_project(lambda x: x, g, 3)


def test_interior_x2_p3_oracle():
    _, g = square_grid()
    q = interior_project(Poly2.monomial(2, 0), g, 3)
    x, w = np.polynomial.legendre.leggauss(10)
    x, w = 0.5 * (x + 1), 0.5 * w
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    B = [np.ones_like(X), X, Y]
    G = np.array([[np.sum(W * a * b) for b in B] for a in B])
    rhs = np.array([np.sum(W * X**2 * a) for a in B])
    c0, cx, cy = np.linalg.solve(G, rhs)
    pts = np.array([[0.2, 0.3], [0.7, 0.9], [0.5, 0.1]])
    assert np.allclose(q.eval(pts), c0 + cx * pts[:, 0] + cy * pts[:, 1], atol=1e-10)


CELLS = [("pegboard", 1, 1), ("pegboard", 1, 0), ("shuriken", 3, 4), ("ptriangle", 1, 1)]


def cell_setup(fam, r, ci, p, params=PRM):
    m = mesh_generate(fam, r)
    eb = mesh_edge_bases(m, p)
    g = boundary_grid(m, m.cells[ci], params)
    return m, m.cells[ci], eb, g, NystromSolver(g)


@pytest.mark.parametrize("fam,r,ci", CELLS)
@pytest.mark.parametrize("p", [1, 2, 3])
def test_reproduces_polynomials(fam, r, ci, p):
    m, cell, eb, g, S = cell_setup(fam, r, ci, p)
    rng = np.random.default_rng(p)
    c = np.zeros((p + 1, p + 1))
    for a in range(p + 1):
        for b in range(p + 1 - a):
            c[a, b] = rng.uniform(-1, 1)
    P = Poly2(c, tuple(g.centroid))
    I = interpolate_cell(P, m, cell, p, eb, g)
    err = cell_interp_error(P, I, g, S)
    assert abs(err.total) < 1e-9
    assert I.interior.allclose(P.laplacian(), atol=1e-9) or p < 2


@pytest.mark.parametrize("fam,r,ci", CELLS)
def test_idempotent(fam, r, ci):
    p = 2
    m, cell, eb, g, S = cell_setup(fam, r, ci, p)
    v = test_function("expz")
    I1 = interpolate_cell(v, m, cell, p, eb, g)
    I2 = interpolate_cell(I1, m, cell, p, eb, g)
    for eid in I1.edge_coefs:
        assert np.abs(I1.edge_coefs[eid] - I2.edge_coefs[eid]).max() < 1e-9
    assert abs(cell_interp_error(I1, I2, g, S).total) < 1e-9


def test_element_reproduced_through_local_space():
    # an element built from random local coefficients is its own interpolant
    p = 2
    m, cell, eb, g, S = cell_setup("pegboard", 1, 1, p)
    v = test_function("rez3")
    I = interpolate_cell(v, m, cell, p, eb, g)
    sp = build_local_space(m, cell, p, eb, 2, PRM)
    coef = I.local_coefficients(m)
    assert coef.shape == (sp.dim,)
    tr = _boundary_trace(I, g)
    harm = sum(ci * f.htrace for ci, f in zip(coef, sp.basis) if f.poly_part is None)
    assert np.abs(tr.values - harm).max() < 1e-12


def test_constants_preserved():
    m, cell, eb, g, S = cell_setup("shuriken", 3, 4, 1)
    v = test_function("const")
    I = interpolate_cell(v, m, cell, 1, eb, g)
    assert abs(cell_interp_error(v, I, g, S).total) < 1e-14


def direct_error(P, I, g):
    """|P - I P|^2 by e = Z + h with Z an anti-Laplacian of lap(e) and h harmonic."""
    c = tuple(g.centroid)
    F = P.laplacian().shifted(c) - I.interior
    Z = anti_laplacian(F)
    tr = trace_of_poly(g, P) - _boundary_trace(I, g)
    hval = tr.values - Z.eval(g.pts)
    hder = tr.dsigma(g) - np.sum(Z.grad_eval(g.pts) * g.dx, axis=1)
    w = NystromSolver(g).solve(hder)
    hh = -g.h * float(w @ hder)
    gx, gy = Z.grad()
    zz = poly_integral(g, gx * gx + gy * gy)
    # (grad Z, grad h) = oint h dZ/dn - int h lap Z
    dZn = np.sum(Z.grad_eval(g.pts) * g.nu, axis=1)
    zh = g.h * float(dZn @ hval) - float(poly_harmonic_integral(g, F, hval, w))
    return zz + 2 * zh + hh


@pytest.mark.parametrize("fam,r,ci", CELLS[:3])
def test_pythagorean_split(fam, r, ci):
    p = 2
    # both routes carry quadrature error near 1e-10 at 64 nodes per edge
    m, cell, eb, g, S = cell_setup(fam, r, ci, p, KressParams(7, 128))
    c = tuple(g.centroid)
    P = Poly2.from_dict({(4, 0): 1.0, (1, 2): 2.0, (0, 3): -1.0, (2, 1): 0.5}, c)
    I = interpolate_cell(P, m, cell, p, eb, g)
    err = cell_interp_error(P, I, g, S)
    assert err.boundary > 0 and err.interior > 0
    assert err.total == pytest.approx(direct_error(P, I, g), rel=1e-8)


def test_interpolant_energy_matches_stiffness():
    p = 2
    m, cell, eb, g, S = cell_setup("pegboard", 1, 1, p)
    zero = Poly2.const(0.0)
    v = test_function("rez3")
    I = interpolate_cell(v, m, cell, p, eb, g)
    sp = build_local_space(m, cell, p, eb, 2, PRM)
    coef = I.local_coefficients(m)
    nb = len(bubble_multi_indices(p))
    coef[-nb:] = 0.0  # harmonic part only
    I.interior = zero
    e = cell_interp_error(TestFunction.from_poly(zero), I, g, S).total
    A = local_stiffness(sp)
    assert e == pytest.approx(coef @ A @ coef, rel=1e-9)


def test_unknown_test_function():
    with pytest.raises(ValueError):
        test_function("sinh")


def test_pegboard_rate_short():
    rows = interp_error_study("pegboard", 1, (2, 4, 8), "rez3", params=KressParams(7, 32))
    assert rows[0].ratio is None
    for row in rows[1:]:
        assert abs(row.ratio - 2.0) < 0.1


def test_global_error_zero_for_linear():
    m = mesh_generate("pegboard", 2)
    P = Poly2.from_dict({(1, 0): 1.0, (0, 1): -2.0, (0, 0): 0.5})
    assert global_interp_error(m, P, 1, params=KressParams(7, 32)) < 1e-7
