import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvtrefftz.edgespace import (build_edge_basis, build_type1_basis, cartesian_frame,
                                   dim_ppe_expected, edge_frame, edge_gram, frame_for_edge,
                                   gecp_select, hierarchical_spanning_set)
from curvtrefftz.geometry import CircularArc, Line, hyperbola_edge, mesh_generate
from curvtrefftz.localspace import mesh_edge_bases
from curvtrefftz.polynomial import Poly2

LINE = Line((0.1, 0.2), (0.9, 0.5))
ARC = CircularArc((0.0, 0.0), 1.0, 0.2, 1.3)


def test_equilateral_apex():
    f = edge_frame((0.0, 0.0), (1.0, 0.0))
    assert np.allclose(f.z2, [0.5, math.sqrt(3) / 2], atol=1e-15)


def test_barycentric_kronecker():
    f = edge_frame((0.3, -0.2), (1.4, 0.7))
    for i, b in enumerate(f.bary):
        for j, z in enumerate(f.vertices):
            assert b.eval(z) == pytest.approx(float(i == j), abs=1e-14)
    total = f.bary[0] + f.bary[1] + f.bary[2]
    assert total.allclose(Poly2.const(1.0, total.center), atol=1e-14)


def test_cartesian_frame():
    z0, z1 = np.array([0.3, -0.2]), np.array([1.4, 0.7])
    lt0, lt1, lt2 = cartesian_frame(z0, z1)
    s = lt0 + lt1
    assert s.allclose(Poly2.const(1.0, s.center), atol=1e-14)
    assert abs(lt2.eval(z0)) < 1e-14 and abs(lt2.eval(z1)) < 1e-14
    assert lt1.eval(z1) == pytest.approx(1.0, abs=1e-14)


def test_cartesian_translation_identities():
    # lt2 is a multiple of l2 and lt0 - lt1 tracks l0 - l1 along the chord
    f = edge_frame((0.3, -0.2), (1.4, 0.7))
    l0, l1, l2 = f.bary
    lt0, lt1, lt2 = cartesian_frame(f.z0, f.z1)
    k = math.sqrt(3) / 2
    assert (lt2 - k * l2).allclose(Poly2.const(0.0, lt2.center), atol=1e-13)
    assert (lt0 - (l0 + 0.5 * l2)).allclose(Poly2.const(0.0, lt0.center), atol=1e-13)
    assert (lt1 - (l1 + 0.5 * l2)).allclose(Poly2.const(0.0, lt1.center), atol=1e-13)


def test_spanning_set_sizes():
    f = edge_frame((0.0, 0.0), (1.0, 0.0))
    assert hierarchical_spanning_set(f, 1).labels == ("l0", "l1", "l2")
    S3 = hierarchical_spanning_set(f, 3)
    assert len(S3) == 10
    assert S3.labels[3:6] == ("4*l1*l2", "4*l0*l2", "4*l0*l1")
    assert all(len(hierarchical_spanning_set(f, p)) == math.comb(p + 2, 2) for p in range(1, 7))


def test_quadratic_scaled_to_unit_max():
    f = edge_frame((0.0, 0.0), (1.0, 0.0))
    b = hierarchical_spanning_set(f, 2).functions[5]
    assert b.eval((0.5, 0.0)) == pytest.approx(1.0, abs=1e-14)
    u = np.linspace(0, 1, 61)
    U, V = np.meshgrid(u, u)
    keep = U + V <= 1
    pts = np.stack([U[keep] + 0.5 * V[keep], math.sqrt(3) / 2 * V[keep]], axis=1)
    assert np.abs(b.eval(pts)).max() <= 1 + 1e-12


def test_gram_first_entry():
    L = float(np.linalg.norm(LINE.end - LINE.start))
    l0 = frame_for_edge(LINE).bary[0]
    assert edge_gram([l0], LINE, normalize=False)[0, 0] == pytest.approx(L / 3, rel=1e-13)


def test_gram_ranks_p1():
    for curve, rank in ((LINE, 2), (ARC, 3), (hyperbola_edge(), 3)):
        S = hierarchical_spanning_set(frame_for_edge(curve), 1)
        assert len(gecp_select(edge_gram(S.functions, curve))) == rank


def test_gecp_identity_and_rank_one():
    assert len(gecp_select(np.eye(3))) == 3
    v = np.array([0.3, -2.0, 1.0])
    assert gecp_select(np.outer(v, v)) == [1]


def test_gecp_rejects_nonsquare():
    with pytest.raises(ValueError):
        gecp_select(np.zeros((2, 3)))


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 8), rank=st.integers(1, 8))
def test_gecp_permutation_equivariant(seed, n, rank):
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((n, min(rank, n)))
    M = B @ B.T
    perm = rng.permutation(n)
    P = np.eye(n)[:, perm]
    base = gecp_select(M)
    moved = gecp_select(P.T @ M @ P)
    # (P^T M P)[i, j] = M[perm[i], perm[j]]
    assert [int(perm[i]) for i in moved] == base


def test_hyperbola_pivots():
    b = build_edge_basis(hyperbola_edge(), 3, tau=1e-12)
    assert [i + 1 for i in b.pivots] == [4, 7, 8, 3, 5]
    assert set(b.labels) == {"l0", "l1", "4*l0*l2", "4*l0*l1", "(3*sqrt(3)/2)*l1*l2*(l1-l2)",
                             "(3*sqrt(3)/2)*l0*l1*(l0-l1)", "27*l0*l1*l2"}


def test_hyperbola_rescaled():
    b = build_edge_basis(hyperbola_edge(), 3, "rescaled", tau=1e-12)
    assert b.labels[:3] == ("l0", "l1", "l2")
    rest = b.labels[3:]
    assert sorted(rest) == sorted(["(3*sqrt(3)/2)*l1*l2*(l1-l2)", "(3*sqrt(3)/2)*l0*l2*(l0-l2)",
                                   "(3*sqrt(3)/2)*l0*l1*(l0-l1)", "27*l0*l1*l2"])


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("curve,m", [(LINE, 1), (ARC, 2)], ids=["line", "arc"])
def test_dimensions(curve, m, p):
    for variant in ("plain", "rescaled"):
        b = build_edge_basis(curve, p, variant)
        assert len(b) == dim_ppe_expected(p, m)


def test_dimension_oracle():
    assert dim_ppe_expected(2, 2) == 5
    assert dim_ppe_expected(3, 2) == 7
    assert dim_ppe_expected(1, 1) == 2
    assert dim_ppe_expected(3, 1) == 4
    assert dim_ppe_expected(3) == 10


def test_straight_p3_has_four():
    assert len(build_edge_basis(Line((0.0, 0.0), (2.0, 1.0)), 3)) == 4


@pytest.mark.parametrize("curve", [LINE, ARC, hyperbola_edge()], ids=["line", "arc", "hyperbola"])
@pytest.mark.parametrize("variant", ["plain", "rescaled"])
def test_hierarchical_endpoints(curve, variant):
    b = build_edge_basis(curve, 3, variant)
    for j in range(len(b)):
        v = b.trace(np.array([0.0, 1.0]), j)
        want = [1.0, 0.0] if j == 0 else [0.0, 1.0] if j == 1 else [0.0, 0.0]
        assert np.allclose(v, want, atol=1e-12)


def test_reverse_swaps_endpoint_roles():
    b = build_edge_basis(ARC, 2, reverse=True)
    assert b.trace(1.0, 0) == pytest.approx(1.0, abs=1e-12)
    assert b.trace(0.0, 1) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_type1_dimension(p):
    b = build_type1_basis(ARC, p)
    assert len(b) == p + 1
    assert np.allclose([b.trace(0.0, 0), b.trace(1.0, 1)], [1.0, 1.0], atol=1e-13)
    for j in range(2, p + 1):
        assert np.allclose(b.trace(np.array([0.0, 1.0]), j), 0.0, atol=1e-13)


@pytest.mark.parametrize("kind", ["type2", "type1"])
def test_trace_derivative(kind):
    b = build_edge_basis(ARC, 3) if kind == "type2" else build_type1_basis(ARC, 3)
    t, h = np.array([0.2, 0.55, 0.8]), 1e-6
    for j in range(len(b)):
        fd = (b.trace(t + h, j) - b.trace(t - h, j)) / (2 * h)
        assert np.allclose(b.dtrace_dt(t, j), fd, atol=1e-7)


def test_shared_edge_basis_is_global():
    m = mesh_generate("pegboard", 2)
    bases = mesh_edge_bases(m, 2)
    for e in m.edges:
        b = bases[e.id]
        lo = min(e.v0, e.v1)
        assert np.allclose(b.frame.z0, m.vertices[lo], atol=1e-14)
        assert b.curve is e.curve
