"""Meshes of curvilinear polygons: edges, oriented edge loops, validation, JSON."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .curves import Curve, Line, curve_from_dict


@dataclass(frozen=True)
class Edge:
    id: int
    v0: int
    v1: int
    curve: Curve

    @property
    def straight(self) -> bool:
        return isinstance(self.curve, Line)


@dataclass(frozen=True)
class Cell:
    """A cell boundary as ``(edge id, orientation)`` pairs; +1 follows the curve."""

    id: int
    loop: tuple

    @property
    def n_edges(self) -> int:
        return len(self.loop)


@dataclass
class Mesh:
    vertices: np.ndarray
    edges: list
    cells: list
    boundary_vertex: np.ndarray = None
    boundary_edge: np.ndarray = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, float)
        if self.boundary_edge is None or self.boundary_vertex is None:
            self._flag_boundary()

    def _flag_boundary(self):
        count = np.zeros(len(self.edges), int)
        for c in self.cells:
            for eid, _ in c.loop:
                count[eid] += 1
        self.boundary_edge = count == 1
        bv = np.zeros(len(self.vertices), bool)
        for e in self.edges:
            if self.boundary_edge[e.id]:
                bv[e.v0] = bv[e.v1] = True
        self.boundary_vertex = bv

    def cell_vertices(self, cell: Cell) -> list:
        """Vertex ids at the start of each loop entry."""
        out = []
        for eid, o in cell.loop:
            e = self.edges[eid]
            out.append(e.v0 if o > 0 else e.v1)
        return out

    def to_dict(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "edges": [{"id": e.id, "v0": e.v0, "v1": e.v1, "curve": e.curve.to_dict()}
                      for e in self.edges],
            "cells": [{"id": c.id, "loop": [[int(a), int(b)] for a, b in c.loop]}
                      for c in self.cells],
        }

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def from_dict(cls, d: dict) -> "Mesh":
        edges = [Edge(int(e["id"]), int(e["v0"]), int(e["v1"]), curve_from_dict(e["curve"]))
                 for e in d["edges"]]
        cells = [Cell(int(c["id"]), tuple((int(a), int(b)) for a, b in c["loop"]))
                 for c in d["cells"]]
        return cls(np.asarray(d["vertices"], float), edges, cells)

    @classmethod
    def load(cls, path) -> "Mesh":
        return cls.from_dict(json.loads(Path(path).read_text()))


class MeshBuilder:
    """Incremental construction with vertex and edge de-duplication.

    Vertices are merged by rounded coordinates. Edges are merged when they join
    the same vertex pair and have the same midpoint, so the two arcs of a bigon
    stay distinct.
    """

    def __init__(self, digits=10):
        self.digits = digits
        self._vkey = {}
        self.vertices = []
        self._ekey = {}
        self.edges = []
        self.cells = []

    def _round(self, p):
        return (round(float(p[0]), self.digits) + 0.0, round(float(p[1]), self.digits) + 0.0)

    def vertex(self, p) -> int:
        k = self._round(p)
        if k not in self._vkey:
            self._vkey[k] = len(self.vertices)
            self.vertices.append((float(p[0]), float(p[1])))
        return self._vkey[k]

    def edge(self, curve: Curve):
        """Return ``(edge id, orientation)`` for traversing ``curve`` forward."""
        v0 = self.vertex(curve.start)
        v1 = self.vertex(curve.end)
        if v0 == v1:
            raise ValueError("closed-contour edges are not supported")
        mid = self._round(curve.position(0.5))
        key = (min(v0, v1), max(v0, v1), mid)
        if key in self._ekey:
            eid = self._ekey[key]
            e = self.edges[eid]
            return eid, (1 if e.v0 == v0 else -1)
        eid = len(self.edges)
        self._ekey[key] = eid
        self.edges.append(Edge(eid, v0, v1, curve))
        return eid, 1

    def cell(self, curves) -> int:
        """Add a cell from curves listed in counter-clockwise traversal order."""
        loop = tuple(self.edge(c) for c in curves)
        cid = len(self.cells)
        self.cells.append(Cell(cid, loop))
        return cid

    def build(self) -> Mesh:
        return Mesh(np.array(self.vertices, float), list(self.edges), list(self.cells))


def _loop_points(mesh: Mesh, cell: Cell, n=32):
    t = (np.arange(n) + 0.5) / n
    pts = []
    for eid, o in cell.loop:
        c = mesh.edges[eid].curve
        tt = t if o > 0 else 1 - t
        pts.append(c.position(tt))
    return np.concatenate(pts)


def cell_area(mesh: Mesh, cell: Cell, n=48) -> float:
    """Area by ``1/2 oint (x dy - y dx)`` with Gauss-Legendre on each edge."""
    t, w = np.polynomial.legendre.leggauss(n)
    t, w = 0.5 * (t + 1), 0.5 * w
    total = 0.0
    for eid, o in cell.loop:
        c = mesh.edges[eid].curve
        P, V = c.position(t), c.velocity(t)
        total += o * 0.5 * float(np.sum(w * (P[:, 0] * V[:, 1] - P[:, 1] * V[:, 0])))
    return total


def _signed_area(pts):
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)


def _orient(u, v, w):
    return (v[..., 0] - u[..., 0]) * (w[..., 1] - u[..., 1]) - \
        (v[..., 1] - u[..., 1]) * (w[..., 0] - u[..., 0])


def _segments_cross(p):
    """True if two non-adjacent segments of the closed polyline ``p`` properly cross."""
    n = len(p)
    a, b = p, np.roll(p, -1, axis=0)
    idx = np.arange(n)
    for i in range(n):
        o1 = _orient(a[i], b[i], a)
        o2 = _orient(a[i], b[i], b)
        o3 = _orient(a, b, np.broadcast_to(a[i], a.shape))
        o4 = _orient(a, b, np.broadcast_to(b[i], a.shape))
        adj = (np.abs(idx - i) <= 1) | (np.abs(idx - i) == n - 1)
        if np.any((o1 * o2 < 0) & (o3 * o4 < 0) & ~adj):
            return True
    return False


def corner_angles(mesh: Mesh, cell: Cell) -> np.ndarray:
    """Interior angle at the start vertex of each loop entry, from one-sided tangents."""
    tin, tout = [], []
    for eid, o in cell.loop:
        c = mesh.edges[eid].curve
        v_start = c.velocity(0.0) if o > 0 else -c.velocity(1.0)
        v_end = c.velocity(1.0) if o > 0 else -c.velocity(0.0)
        tout.append(v_start)
        tin.append(v_end)
    angles = []
    m = len(cell.loop)
    for k in range(m):
        incoming = tin[(k - 1) % m]
        outgoing = tout[k]
        # counter-clockwise sweep from the outgoing tangent to the reversed incoming one
        a_out = math.atan2(outgoing[1], outgoing[0])
        a_back = math.atan2(-incoming[1], -incoming[0])
        ang = (a_back - a_out) % (2 * math.pi)
        angles.append(ang)
    return np.array(angles)


def mesh_validate(mesh: Mesh, domain_area=None, on_boundary=None, tol=1e-8) -> list:
    """Check mesh invariants; return human-readable violations (empty if valid).

    An interior edge used by only one cell is indistinguishable from a domain
    boundary edge by counting alone, so pass ``on_boundary`` (point -> bool)
    and/or ``domain_area`` to catch it.
    """
    report = []
    refs = {}
    for c in mesh.cells:
        for eid, o in c.loop:
            refs.setdefault(eid, []).append((c.id, o))
    for e in mesh.edges:
        L = np.linalg.norm(e.curve.end - e.curve.start)
        scale = max(L, 1e-300)
        if np.linalg.norm(e.curve.start - mesh.vertices[e.v0]) > 1e-12 * scale * 10 or \
                np.linalg.norm(e.curve.end - mesh.vertices[e.v1]) > 1e-12 * scale * 10:
            report.append(f"edge {e.id}: endpoints do not match vertices {e.v0},{e.v1}")
        r = refs.get(e.id, [])
        if len(r) == 0:
            report.append(f"edge {e.id}: not referenced by any cell")
        elif len(r) > 2:
            report.append(f"edge {e.id}: referenced by {len(r)} cells")
        elif len(r) == 2 and r[0][1] == r[1][1]:
            report.append(f"edge {e.id}: cells {r[0][0]},{r[1][0]} share it with equal orientation")
    if on_boundary is not None:
        for e in mesh.edges:
            if len(refs.get(e.id, [])) == 1 and not on_boundary(e.curve.position(0.5)):
                report.append(f"edge {e.id}: interior edge referenced by one cell only")
    total = 0.0
    for c in mesh.cells:
        verts = mesh.cell_vertices(c)
        for k, (eid, o) in enumerate(c.loop):
            e = mesh.edges[eid]
            end = e.v1 if o > 0 else e.v0
            nxt = verts[(k + 1) % len(verts)]
            if end != nxt:
                report.append(f"cell {c.id}: loop not closed at entry {k}")
        pts = _loop_points(mesh, c)
        area = cell_area(mesh, c)
        if area <= 0:
            report.append(f"cell {c.id}: loop is not counter-clockwise")
        total += area
        ang = corner_angles(mesh, c)
        bad = np.where((ang < 1e-8) | (ang > 2 * math.pi - 1e-8))[0]
        for k in bad:
            report.append(f"cell {c.id}: cusp or slit at vertex {verts[k]}")
        if _segments_cross(pts):
            report.append(f"cell {c.id}: loop self-intersects")
    if domain_area is not None and abs(total - domain_area) > tol:
        report.append(f"mesh: cell areas sum to {total:.12g}, expected {domain_area}")
    return report
