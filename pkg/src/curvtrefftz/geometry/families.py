"""Generators for the benchmark mesh families.

All families except ``lshape`` mesh the unit square. Cells are emitted in a
fixed order so that numbering (and hence every downstream array) is
deterministic.
"""

from __future__ import annotations

import math

import numpy as np

from .curves import CircularArc, Line, SinePerturbedLine
from .mesh import Mesh, MeshBuilder

FAMILIES = ("pegboard", "shuriken", "jigsaw", "ptriangle", "lshape", "square")

# domain areas, for validation
DOMAIN_AREA = {"lshape": 3.0}


def domain_area(family: str) -> float:
    return DOMAIN_AREA.get(family, 1.0)


def on_domain_boundary(family: str):
    """Predicate ``point -> bool`` for the outer boundary of the family's domain."""
    if family == "lshape":
        def f(p, tol=1e-9):
            x, y = p
            if abs(abs(x) - 1) < tol or abs(y - 1) < tol or (abs(y + 1) < tol and x <= tol):
                return True
            return (abs(x) < tol and y <= tol) or (abs(y) < tol and x >= -tol)
        return f

    def g(p, tol=1e-9):
        x, y = p
        return min(abs(x), abs(y), abs(1 - x), abs(1 - y)) < tol
    return g


def mesh_generate(family: str, r: int, **params) -> Mesh:
    """Build a mesh of the named family at refinement level ``r``.

    Parameters
    ----------
    family : str
        One of ``FAMILIES``.
    r : int
        Mesh parameter; cells per side of the unit square (for ``lshape`` the
        small squares have side ``1/(3r)``).
    **params
        ``rho`` (pegboard, circle radius relative to block side, default 0.35),
        ``amplitude`` (shuriken, relative to edge length, default 0.25),
        ``a`` (ptriangle, arc-center offset, default 1.0),
        ``tab`` (jigsaw, tab radius relative to edge length, default 1/6).
    """
    if not isinstance(r, (int, np.integer)) or r < 1:
        raise ValueError("r must be a positive integer")
    r = int(r)
    gens = {
        "pegboard": _pegboard,
        "shuriken": _shuriken,
        "jigsaw": _jigsaw,
        "ptriangle": _ptriangle,
        "lshape": _lshape,
        "square": _square,
    }
    if family not in gens:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    return gens[family](r, **params)


def _square(r, **params):
    if params:
        raise ValueError(f"square takes no parameters, got {sorted(params)}")
    h = 1.0 / r
    b = MeshBuilder()
    for j in range(r):
        for i in range(r):
            x0, y0 = i * h, j * h
            P = [(x0, y0), (x0 + h, y0), (x0 + h, y0 + h), (x0, y0 + h)]
            b.cell([Line(P[k], P[(k + 1) % 4]) for k in range(4)])
    return b.build()


def _pegboard(r, rho=0.35):
    if not 0 < rho < 0.5:
        raise ValueError("pegboard rho must lie in (0, 1/2)")
    h = 1.0 / r
    R = rho * h
    b = MeshBuilder()
    for j in range(r):
        for i in range(r):
            x0, y0 = i * h, j * h
            cx, cy = x0 + h / 2, y0 + h / 2
            c = (cx, cy)
            left, right = (cx - R, cy), (cx + R, cy)
            lower = CircularArc(c, R, math.pi, 2 * math.pi)
            upper = CircularArc(c, R, 0.0, math.pi)
            # bigon
            b.cell([lower, upper])
            # lower half-washer
            b.cell([
                Line((x0, y0), (x0 + h, y0)),
                Line((x0 + h, y0), (x0 + h, cy)),
                Line((x0 + h, cy), right),
                CircularArc(c, R, 2 * math.pi, math.pi),
                Line(left, (x0, cy)),
                Line((x0, cy), (x0, y0)),
            ])
            # upper half-washer
            b.cell([
                Line((x0 + h, y0 + h), (x0, y0 + h)),
                Line((x0, y0 + h), (x0, cy)),
                Line((x0, cy), left),
                CircularArc(c, R, math.pi, 0.0),
                Line(right, (x0 + h, cy)),
                Line((x0 + h, cy), (x0 + h, y0 + h)),
            ])
    return b.build()


def _shuriken(r, amplitude=0.25):
    if not 0 < amplitude <= 0.3:
        raise ValueError("shuriken amplitude must lie in (0, 0.3]")
    h = 1.0 / r

    def hedge(i, j):
        # horizontal edge from (i, j) to (i+1, j), defined left to right
        a, bb = (i * h, j * h), ((i + 1) * h, j * h)
        if j == 0 or j == r:
            return Line(a, bb)
        return SinePerturbedLine(a, bb, amplitude * h, 2)

    def vedge(i, j):
        # vertical edge from (i, j) to (i, j+1), defined bottom to top
        a, bb = (i * h, j * h), (i * h, (j + 1) * h)
        if i == 0 or i == r:
            return Line(a, bb)
        return SinePerturbedLine(a, bb, amplitude * h, 2)

    b = MeshBuilder()
    for j in range(r):
        for i in range(r):
            b.cell([hedge(i, j), vedge(i + 1, j), _rev(hedge(i, j + 1)), _rev(vedge(i, j))])
    return b.build()


def _rev(c):
    """The same point set traversed backwards (only used to look up existing edges)."""
    if isinstance(c, Line):
        return Line(c.b, c.a)
    if isinstance(c, SinePerturbedLine):
        # x(1-t) of a->b is the b->a chord displaced along its own right
        # normal by (-1)^k A sin(k pi t)
        sgn = 1.0 if c.halfwaves % 2 == 0 else -1.0
        return SinePerturbedLine(c.b, c.a, sgn * c.amplitude, c.halfwaves)
    if isinstance(c, CircularArc):
        return CircularArc(c.center, c.radius, c.theta1, c.theta0)
    raise TypeError(type(c))


def _jigsaw(r, tab=1.0 / 6.0):
    if not 0 < tab < 0.25 + 1e-12:
        raise ValueError("jigsaw tab must lie in (0, 1/4]")
    h = 1.0 / r

    def pieces(a, bb, sign):
        # straight, semicircular tab on the middle (2*tab*h wide), straight
        a, bb = np.asarray(a, float), np.asarray(bb, float)
        d = (bb - a) / h
        m = 0.5 * (a + bb)
        p1 = tuple(m - tab * h * d)
        p2 = tuple(m + tab * h * d)
        th = math.atan2(d[1], d[0])
        # sign +1: bump to the left of a->b
        if sign > 0:
            arc = CircularArc(tuple(m), tab * h, th + math.pi, th)
        else:
            arc = CircularArc(tuple(m), tab * h, th + math.pi, th + 2 * math.pi)
        return [Line(tuple(a), p1), arc, Line(p2, tuple(bb))]

    def hedge(i, j):
        a, bb = (i * h, j * h), ((i + 1) * h, j * h)
        if j == 0 or j == r:
            return [Line(a, bb)]
        return pieces(a, bb, 1 if (i + j) % 2 == 0 else -1)

    def vedge(i, j):
        a, bb = (i * h, j * h), (i * h, (j + 1) * h)
        if i == 0 or i == r:
            return [Line(a, bb)]
        return pieces(a, bb, -1 if (i + j) % 2 == 0 else 1)

    def rev(lst):
        return [_rev(c) for c in reversed(lst)]

    b = MeshBuilder()
    for j in range(r):
        for i in range(r):
            b.cell(hedge(i, j) + vedge(i + 1, j) + rev(hedge(i, j + 1)) + rev(vedge(i, j)))
    return b.build()


def _ptriangle(r, a=1.0):
    if not a > 0:
        raise ValueError("ptriangle a must be positive")
    h = 1.0 / r
    b = MeshBuilder()
    for j in range(r):
        for i in range(r):
            x0, y0 = i * h, j * h
            c = (x0 - a * h, y0 - a * h)
            arc = CircularArc.through(c, (x0 + h, y0), (x0, y0 + h), ccw=True)
            b.cell([Line((x0, y0), (x0 + h, y0)), arc, Line((x0, y0 + h), (x0, y0))])
            b.cell([Line((x0 + h, y0), (x0 + h, y0 + h)), Line((x0 + h, y0 + h), (x0, y0 + h)),
                    _rev(arc)])
    return b.build()


def lshape_big_cell_points(r):
    """Boundary vertices of the large L cell, counter-clockwise from (-1/3, -1/3).

    Coordinates are integer multiples of ``1/(3r)`` computed the same way as the
    small squares' corners, so shared vertices agree bit for bit.
    """
    s = 1.0 / (3 * r)
    # integer grid coordinates; -1/3 is -r, 1/3 is r
    ij = []

    def run(p, q, n):
        for k in range(n):
            ij.append((p[0] + (q[0] - p[0]) * k // n, p[1] + (q[1] - p[1]) * k // n))

    run((-r, -r), (0, -r), r)
    run((0, -r), (0, 0), 1)
    run((0, 0), (r, 0), 1)
    run((r, 0), (r, r), r)
    run((r, r), (-r, r), 2 * r)
    run((-r, r), (-r, -r), 2 * r)
    return [(i * s, j * s) for i, j in ij]


def _lshape(r):
    """L-shaped domain (-1,1)^2 minus [0,1]x[-1,0]: one large L cell around the
    re-entrant corner plus 24 r^2 squares of side 1/(3r)."""
    s = 1.0 / (3 * r)
    b = MeshBuilder()
    P = lshape_big_cell_points(r)
    b.cell([Line(P[k], P[(k + 1) % len(P)]) for k in range(len(P))])
    for j in range(-3 * r, 3 * r):
        for i in range(-3 * r, 3 * r):
            if i >= 0 and j < 0:
                continue
            if -r <= i < r and -r <= j < r:
                continue
            Q = [(i * s, j * s), ((i + 1) * s, j * s), ((i + 1) * s, (j + 1) * s), (i * s, (j + 1) * s)]
            b.cell([Line(Q[k], Q[(k + 1) % 4]) for k in range(4)])
    return b.build()
