"""Nystrom grids on cell boundaries with Kress-type corner grading."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mesh import Cell, Mesh


@dataclass(frozen=True)
class KressParams:
    """Grading order ``q`` and nodes per edge for boundary grids."""

    q: int = 7
    n_per_edge: int = 96

    def __post_init__(self):
        if self.q < 2:
            raise ValueError("grading order q must be >= 2")
        if self.n_per_edge < 8 or self.n_per_edge % 2:
            raise ValueError("n_per_edge must be even and >= 8")


def kress_map(u, q):
    """Sigmoidal substitution on [0, 1] and its derivative.

    Returns ``(w, 1 - w, dw/du)``; the complement is evaluated by symmetry so
    it stays accurate next to u = 1. All derivatives of order < q vanish at
    both endpoints.
    """
    u = np.asarray(u, float)

    def vfun(x):
        xi = 1.0 - 2.0 * x
        return (1.0 / q - 0.5) * xi**3 - xi / q + 0.5

    def dv(x):
        xi = 1.0 - 2.0 * x
        return -6.0 * (1.0 / q - 0.5) * xi**2 + 2.0 / q

    a, b = vfun(u), vfun(1.0 - u)
    aq, bq = a**q, b**q
    den = aq + bq
    w = aq / den
    wc = bq / den
    da, db = dv(u), -dv(1.0 - u)
    dw = q * (a ** (q - 1) * b ** (q - 1)) * (da * b - a * db) / den**2
    return w, wc, dw


@dataclass
class BoundaryGrid:
    """Equispaced midpoint nodes in a global periodic parameter on ``[0, 2*pi)``.

    Edge ``k`` of the loop owns ``counts[k]`` consecutive nodes; inside an edge
    the curve parameter is the Kress map of the local parameter, so nodes
    cluster algebraically toward both corners and no node sits on a corner.
    """

    cell_id: int
    edge_ids: tuple
    orient: tuple
    counts: tuple
    q: int
    sigma: np.ndarray
    t: np.ndarray
    pts: np.ndarray
    dx: np.ndarray
    corners: np.ndarray
    corner_id: np.ndarray
    corner_off: np.ndarray
    edge_of: np.ndarray
    curves: tuple = ()
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n(self) -> int:
        return len(self.sigma)

    @property
    def h(self) -> float:
        return 2 * math.pi / self.n

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.dx[:, 0], self.dx[:, 1])

    @property
    def weights(self) -> np.ndarray:
        """Arc-length quadrature weights ds."""
        return self.h * self.speed

    @property
    def tangent(self) -> np.ndarray:
        return self.dx / self.speed[:, None]

    @property
    def normal(self) -> np.ndarray:
        """Outward unit normal; the loop is counter-clockwise."""
        T = self.tangent
        return np.stack([T[:, 1], -T[:, 0]], axis=1)

    @property
    def nu(self) -> np.ndarray:
        """Outward normal scaled by the parameter speed: ``n ds/dsigma``."""
        return np.stack([self.dx[:, 1], -self.dx[:, 0]], axis=1)

    def edge_slice(self, k) -> slice:
        start = int(sum(self.counts[:k]))
        return slice(start, start + self.counts[k])

    @property
    def perimeter(self) -> float:
        return float(np.sum(self.weights))

    @property
    def area(self) -> float:
        x, y = self.pts[:, 0], self.pts[:, 1]
        return 0.5 * self.h * float(np.sum(x * self.dx[:, 1] - y * self.dx[:, 0]))

    @property
    def centroid(self) -> np.ndarray:
        # int x dA = 1/2 oint x^2 dy, int y dA = -1/2 oint y^2 dx
        x, y = self.pts[:, 0], self.pts[:, 1]
        a = self.area
        cx = 0.5 * self.h * np.sum(x * x * self.dx[:, 1]) / a
        cy = -0.5 * self.h * np.sum(y * y * self.dx[:, 0]) / a
        return np.array([cx, cy])

    @property
    def diameter(self) -> float:
        c = self.corners
        p = np.concatenate([self.pts, c])
        if len(p) > 4000:
            p = p[:: len(p) // 2000 + 1]
        d = p[:, None, :] - p[None, :, :]
        return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))

    def differences(self):
        """``(Dx, Dy)`` with ``D[i, j] = pts[j] - pts[i]``, corner-accurate.

        Pairs whose nodes are nearest to the same corner use the stored offsets
        from that corner, which keeps tiny separations exact.
        """
        if "diff" not in self._cache:
            P, O = self.pts, self.corner_off
            Dx = P[None, :, 0] - P[:, None, 0]
            Dy = P[None, :, 1] - P[:, None, 1]
            same = self.corner_id[None, :] == self.corner_id[:, None]
            Ox = O[None, :, 0] - O[:, None, 0]
            Oy = O[None, :, 1] - O[:, None, 1]
            Dx = np.where(same, Ox, Dx)
            Dy = np.where(same, Oy, Dy)
            self._cache["diff"] = (Dx, Dy)
        return self._cache["diff"]

    def clear_cache(self):
        self._cache.clear()


def boundary_grid(mesh: Mesh, cell: Cell, params: KressParams = KressParams(),
                  counts=None) -> BoundaryGrid:
    """Build the graded Nystrom grid for ``cell``.

    ``counts`` optionally overrides the per-edge node numbers (each even, >= 8).
    """
    E = cell.n_edges
    if counts is None:
        counts = (params.n_per_edge,) * E
    counts = tuple(int(c) for c in counts)
    if any(c < 8 or c % 2 for c in counts):
        raise ValueError("per-edge node counts must be even and >= 8")
    N = sum(counts)
    h = 2 * math.pi / N
    q = params.q

    sig, ts, pts, dxs, cid, coff, eof = [], [], [], [], [], [], []
    corners = []
    pos = 0
    for k, (eid, o) in enumerate(cell.loop):
        curve = mesh.edges[eid].curve
        n = counts[k]
        u = (np.arange(n) + 0.5) / n
        w, wc, dw = kress_map(u, q)
        if o > 0:
            t, tc = w, wc
        else:
            t, tc = wc, w
        P = curve.position(t)
        V = curve.velocity(t)
        if np.any(np.hypot(V[:, 0], V[:, 1]) < 1e-14):
            raise ValueError(f"degenerate edge {eid}: vanishing parametric speed")
        # d x / d sigma = x'(t) * dt/du * du/dsigma, du/dsigma = 1/(n h)
        dtdu = dw if o > 0 else -dw
        dX = V * (dtdu / (n * h))[:, None]
        start = curve.start if o > 0 else curve.end
        corners.append(start)
        # offsets from the nearest loop corner; first half -> start of traversal
        first = u < 0.5
        off = np.empty_like(P)
        s_from_start = w  # local parameter distance from traversal start
        s_from_end = wc
        if o > 0:
            off[first] = curve.delta(s_from_start[first], 0)
            off[~first] = curve.delta(s_from_end[~first], 1)
        else:
            off[first] = curve.delta(s_from_start[first], 1)
            off[~first] = curve.delta(s_from_end[~first], 0)
        ids = np.where(first, k, (k + 1) % E)
        sig.append((pos + np.arange(n) + 0.5) * h)
        ts.append(t)
        pts.append(P)
        dxs.append(dX)
        cid.append(ids)
        coff.append(off)
        eof.append(np.full(n, k))
        pos += n
    return BoundaryGrid(
        cell_id=cell.id,
        edge_ids=tuple(e for e, _ in cell.loop),
        orient=tuple(o for _, o in cell.loop),
        counts=counts,
        q=q,
        sigma=np.concatenate(sig),
        t=np.concatenate(ts),
        pts=np.concatenate(pts),
        dx=np.concatenate(dxs),
        corners=np.array(corners),
        corner_id=np.concatenate(cid),
        corner_off=np.concatenate(coff),
        edge_of=np.concatenate(eof),
        curves=tuple(mesh.edges[eid].curve for eid, _ in cell.loop),
    )
