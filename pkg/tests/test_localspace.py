import math

import numpy as np
import pytest

from curvtrefftz.bie import HarmonicRep, cauchy_eval
from curvtrefftz.config import SQUARE_REF
from curvtrefftz.geometry import CircularArc, KressParams, MeshBuilder, mesh_generate
from curvtrefftz.localspace import (bubble_enrichment, bubble_multi_indices, build_local_space,
                                    h1_seminorm_sq, local_dimension_expected, local_load,
                                    local_matrices, local_stiffness, mesh_edge_bases)
from curvtrefftz.polynomial import Poly2

BILINEAR = np.array([[4, -1, -2, -1], [-1, 4, -1, -2], [-2, -1, 4, -1], [-1, -2, -1, 4]]) / 6.0

# (family, r, cell, dim V_1, dim V_2)
SHAPES = {
    "shuriken": ("shuriken", 3, 4, 8, 21),
    "half-washer": ("pegboard", 1, 1, 7, 15),
    "bigon": ("pegboard", 1, 0, 4, 9),
    "square": ("square", 1, 0, 4, 9),
    "L": ("lshape", 1, 0, 8, 17),
}

_meshes = {}


def space(name, p, element_type=2, n=96, **kw):
    fam, r, ci, _, _ = SHAPES[name]
    if (fam, r) not in _meshes:
        _meshes[(fam, r)] = mesh_generate(fam, r)
    m = _meshes[(fam, r)]
    eb = mesh_edge_bases(m, p, element_type)
    return m, build_local_space(m, m.cells[ci], p, eb, element_type, KressParams(7, n), **kw)


@pytest.mark.parametrize("name", list(SHAPES))
@pytest.mark.parametrize("p", [1, 2])
def test_dimensions(name, p):
    m, sp = space(name, p, n=32)
    want = SHAPES[name][2 + p]
    assert sp.dim == want
    eb = mesh_edge_bases(m, p)
    edge_dims = [len(eb[e]) for e, _ in m.cells[SHAPES[name][2]].loop]
    assert local_dimension_expected(edge_dims, p) == want


def test_shuriken_type1_dimension():
    _, sp = space("shuriken", 1, element_type=1, n=32)
    assert sp.dim == 4


def test_bubble_indices():
    assert bubble_multi_indices(1) == []
    assert len(bubble_multi_indices(4)) == 6


def test_bilinear_square():
    m = mesh_generate("lshape", 1)
    cell = m.cells[1]
    eb = mesh_edge_bases(m, 1)
    sp = build_local_space(m, cell, 1, eb, 2, KressParams(7, 64))
    assert sp.dim == 4
    assert np.abs(local_stiffness(sp) - BILINEAR).max() < 1e-8


@pytest.mark.parametrize("name", ["shuriken", "half-washer", "bigon", "L"])
def test_constants_in_kernel(name):
    _, sp = space(name, 1, n=64)
    A = local_stiffness(sp)
    assert np.abs(A.sum(axis=1)).max() < 1e-8


def test_bigon_psd_one_kernel():
    _, sp = space("bigon", 1, n=64)
    ev = np.linalg.eigvalsh(local_stiffness(sp))
    assert ev[0] > -1e-10
    assert np.sum(ev < 1e-8) == 1


@pytest.mark.parametrize("name,p", [("shuriken", 1), ("shuriken", 2), ("half-washer", 2),
                                    ("bigon", 3), ("L", 1)])
def test_symmetry_at_defaults(name, p):
    _, sp = space(name, p)
    A, asym = local_stiffness(sp, return_asymmetry=True)
    assert asym < 1e-8 * np.abs(A).max()


def test_shuriken_type1_symmetry():
    _, sp = space("shuriken", 1, element_type=1)
    A, asym = local_stiffness(sp, return_asymmetry=True)
    assert asym < 1e-8 * np.abs(A).max()


def test_refinement_invariance():
    _, a = space("half-washer", 2, n=96)
    _, b = space("half-washer", 2, n=192)
    assert np.abs(local_stiffness(a) - local_stiffness(b)).max() < 1e-9


def test_load_square():
    h = 1.0 / 3
    m = mesh_generate("lshape", 1)
    sp = build_local_space(m, m.cells[1], 1, mesh_edge_bases(m, 1), 2, KressParams(7, 64))
    b = local_load(sp, 1.0)
    assert np.allclose(b, h * h / 4, atol=1e-12)
    assert b.sum() == pytest.approx(h * h, abs=1e-12)
    assert np.all(local_load(sp, 0.0) == 0)


def test_load_polynomial_rhs():
    # int_K x v over the unit square, v the vertex function of (1, 1)
    _, sp = space("square", 1, n=64)
    b = local_load(sp, Poly2.monomial(1, 0))
    k = [i for i, f in enumerate(sp.basis) if np.allclose(sp.grid.corners[i], [1.0, 1.0])][0]
    assert b[k] == pytest.approx(1 / 6, abs=1e-12)


def test_seminorm_examples():
    _, sp = space("square", 1, n=64)
    x_vals = np.array([c[0] for c in sp.grid.corners])
    assert h1_seminorm_sq(sp, np.zeros(4)) == 0.0
    assert h1_seminorm_sq(sp, x_vals) == pytest.approx(1.0, abs=1e-10)
    assert abs(h1_seminorm_sq(sp, np.full(4, 2.5))) < 1e-10
    with pytest.raises(ValueError):
        h1_seminorm_sq(sp, np.zeros(3))


def test_local_matrices_bundle():
    _, sp = space("bigon", 2)
    lm = local_matrices(sp, 1.0)
    assert lm.A.shape == (sp.dim, sp.dim) and lm.b.shape == (sp.dim,)
    assert lm.asymmetry < 1e-8 * np.abs(lm.A).max()


def _fit_harmonic(sp, u_trace):
    # least-squares fit of the boundary trace by harmonic basis functions
    harm = [f for f in sp.basis if f.poly_part is None]
    G = np.column_stack([f.htrace for f in harm])
    c, *_ = np.linalg.lstsq(G, u_trace, rcond=None)
    return harm, c


@pytest.mark.parametrize("name", ["shuriken", "half-washer", "bigon"])
def test_reproduces_quadratic_harmonic(name):
    _, sp = space(name, 2)
    g = sp.grid
    cx, cy = g.centroid
    u = lambda X, Y: (X - 0.1) ** 2 - (Y + 0.2) ** 2
    harm, c = _fit_harmonic(sp, u(g.pts[:, 0], g.pts[:, 1]))
    resid = sum(ci * f.htrace for ci, f in zip(c, harm)) - u(g.pts[:, 0], g.pts[:, 1])
    assert np.abs(resid).max() < 1e-10
    h = HarmonicRep(g, sum(ci * f.htrace for ci, f in zip(c, harm)),
                    sum(ci * f.conj for ci, f in zip(c, harm)),
                    sum(ci * f.hdtrace for ci, f in zip(c, harm)))
    rng = np.random.default_rng(0)
    diam = g.diameter
    pts = []
    while len(pts) < 5:
        z = complex(cx, cy) + 0.15 * diam * complex(*rng.uniform(-1, 1, 2))
        try:
            val = cauchy_eval(h, z, 0, delta=0.05)
        except ValueError:
            continue
        pts.append((z, val))
    for z, val in pts:
        assert np.real(val) == pytest.approx(u(z.real, z.imag), abs=1e-8)


def test_shared_edge_traces_agree():
    m = mesh_generate("pegboard", 2)
    eb = mesh_edge_bases(m, 2)
    prm = KressParams(7, 32)
    spaces = {c.id: build_local_space(m, c, 2, eb, 2, prm) for c in m.cells}
    checked = 0
    for e in m.edges:
        users = [(c.id, k) for c in m.cells for k, (eid, _) in enumerate(c.loop) if eid == e.id]
        if len(users) != 2:
            continue
        (a, ka), (b, kb) = users
        ga, gb = spaces[a].grid, spaces[b].grid
        fa = {f.owner: f.htrace[ga.edge_slice(ka)] for f in spaces[a].basis if f.kind != "bubble"}
        fb = {f.owner: f.htrace[gb.edge_slice(kb)] for f in spaces[b].basis if f.kind != "bubble"}
        for key in set(fa) & set(fb):
            assert np.abs(fa[key] - fb[key][::-1]).max() < 1e-12
            checked += 1
    assert checked > 0


def _disk_mesh(radius=1.0):
    b = MeshBuilder()
    b.cell([CircularArc((0.0, 0.0), radius, 0.0, math.pi),
            CircularArc((0.0, 0.0), radius, math.pi, 2 * math.pi)])
    return b.build()


def test_bubble_disk():
    m = _disk_mesh()
    fn, grid, load, energy = bubble_enrichment(m, m.cells[0], 1.0, KressParams(7, 64))
    assert energy == pytest.approx(math.pi / 8, abs=1e-10)
    assert np.abs(fn.trace(grid)).max() < 1e-12


def test_bubble_unit_square():
    m = mesh_generate("square", 1)
    _, _, load, energy = bubble_enrichment(m, m.cells[0], 1.0, KressParams(7, 128))
    assert energy == pytest.approx(SQUARE_REF, abs=1e-10)


def test_bubble_zero_rhs():
    m = mesh_generate("square", 1)
    fn, grid, load, energy = bubble_enrichment(m, m.cells[0], 0.0, KressParams(7, 16))
    assert load == 0 and energy == 0
    assert np.all(fn.trace(grid) == 0)


def test_enrichment_in_local_space():
    m = mesh_generate("lshape", 1)
    eb = mesh_edge_bases(m, 1)
    sp = build_local_space(m, m.cells[0], 1, eb, 2, KressParams(7, 64), enrich=[-1.0])
    A = local_stiffness(sp)
    k = [i for i, f in enumerate(sp.basis) if f.kind == "enrich"][0]
    # harmonic functions are energy-orthogonal to the enrichment
    assert np.abs(np.delete(A[k], k)).max() == 0.0
    assert A[k, k] > 0
