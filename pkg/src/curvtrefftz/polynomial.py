"""Bivariate polynomials in monomials about a center, and their anti-Laplacians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import comb


def _trim(c):
    nz = np.argwhere(c != 0)
    if len(nz) == 0:
        return np.zeros((1, 1))
    d = int(nz.sum(axis=1).max())
    out = np.zeros((d + 1, d + 1))
    m = min(d + 1, c.shape[0])
    out[:m, :m] = c[:m, :m]
    return out


@dataclass(frozen=True, eq=False)
class Poly2:
    """``sum c[a, b] (x - cx)^a (y - cy)^b`` with a dense triangular coefficient table."""

    coef: np.ndarray
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coef, float))
        n = max(c.shape)
        sq = np.zeros((n, n))
        sq[: c.shape[0], : c.shape[1]] = c
        object.__setattr__(self, "coef", _trim(sq))
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    # construction -----------------------------------------------------------
    @classmethod
    def const(cls, value, center=(0.0, 0.0)):
        return cls(np.array([[float(value)]]), center)

    @classmethod
    def monomial(cls, a, b, center=(0.0, 0.0), scale=1.0):
        c = np.zeros((a + b + 1, a + b + 1))
        c[a, b] = scale
        return cls(c, center)

    @classmethod
    def from_dict(cls, terms: dict, center=(0.0, 0.0)):
        d = max((a + b for a, b in terms), default=0)
        c = np.zeros((d + 1, d + 1))
        for (a, b), v in terms.items():
            c[a, b] += v
        return cls(c, center)

    @classmethod
    def affine(cls, c0, cx, cy, center=(0.0, 0.0)):
        """``c0 + cx (x - x0) + cy (y - y0)``."""
        c = np.zeros((2, 2))
        c[0, 0], c[1, 0], c[0, 1] = c0, cx, cy
        return cls(c, center)

    # structure --------------------------------------------------------------
    @property
    def degree(self) -> int:
        nz = np.argwhere(self.coef != 0)
        return int(nz.sum(axis=1).max()) if len(nz) else 0

    def terms(self) -> dict:
        return {(int(a), int(b)): float(self.coef[a, b]) for a, b in np.argwhere(self.coef != 0)}

    def is_zero(self) -> bool:
        return not np.any(self.coef)

    def _pad(self, n):
        c = np.zeros((n, n))
        m = self.coef.shape[0]
        c[:m, :m] = self.coef
        return c

    def shifted(self, center) -> "Poly2":
        """Same polynomial re-expanded about ``center``."""
        center = (float(center[0]), float(center[1]))
        if center == self.center:
            return self
        # x - x0 = (x - x1) + (x1 - x0)
        dx = center[0] - self.center[0]
        dy = center[1] - self.center[1]
        d = self.coef.shape[0]
        out = np.zeros((d, d))
        for a, b in np.argwhere(self.coef != 0):
            v = self.coef[a, b]
            for i in range(a + 1):
                ca = comb(a, i, exact=True) * dx ** (a - i)
                for j in range(b + 1):
                    out[i, j] += v * ca * comb(b, j, exact=True) * dy ** (b - j)
        return Poly2(out, center)

    # arithmetic -------------------------------------------------------------
    def _aligned(self, other):
        if not isinstance(other, Poly2):
            other = Poly2.const(other, self.center)
        other = other.shifted(self.center)
        n = max(self.coef.shape[0], other.coef.shape[0])
        return self._pad(n), other._pad(n)

    def __add__(self, other):
        a, b = self._aligned(other)
        return Poly2(a + b, self.center)

    __radd__ = __add__

    def __neg__(self):
        return Poly2(-self.coef, self.center)

    def __sub__(self, other):
        return self + (-other if isinstance(other, Poly2) else -float(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Poly2):
            return Poly2(self.coef * float(other), self.center)
        o = other.shifted(self.center)
        da, db = self.coef.shape[0], o.coef.shape[0]
        out = np.zeros((da + db - 1, da + db - 1))
        for a, b in np.argwhere(self.coef != 0):
            out[a:a + db, b:b + db] += self.coef[a, b] * o.coef
        return Poly2(out, self.center)

    __rmul__ = __mul__

    def __truediv__(self, s):
        return Poly2(self.coef / float(s), self.center)

    def __pow__(self, k: int):
        out = Poly2.const(1.0, self.center)
        for _ in range(k):
            out = out * self
        return out

    def allclose(self, other, rtol=1e-12, atol=1e-14) -> bool:
        a, b = self._aligned(other)
        scale = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-300)
        return bool(np.all(np.abs(a - b) <= atol + rtol * scale))

    # calculus / evaluation --------------------------------------------------
    def __call__(self, x, y=None):
        return self.eval(x, y)

    def eval(self, x, y=None):
        """Evaluate at points; accepts ``(x, y)`` arrays or an ``(..., 2)`` array."""
        if y is None:
            p = np.asarray(x, float)
            x, y = p[..., 0], p[..., 1]
        X = np.asarray(x, float) - self.center[0]
        Y = np.asarray(y, float) - self.center[1]
        c = self.coef
        d = c.shape[0]
        # Horner in x with y-polynomial coefficients
        res = np.zeros(np.broadcast(X, Y).shape)
        for a in range(d - 1, -1, -1):
            row = np.zeros_like(res)
            for b in range(d - 1 - a, -1, -1):
                row = row * Y + c[a, b]
            res = res * X + row
        return res

    def dx(self) -> "Poly2":
        c = self.coef
        d = c.shape[0]
        out = np.zeros((d, d))
        if d > 1:
            out[: d - 1, :] = c[1:, :] * np.arange(1, d)[:, None]
        return Poly2(out, self.center)

    def dy(self) -> "Poly2":
        c = self.coef
        d = c.shape[0]
        out = np.zeros((d, d))
        if d > 1:
            out[:, : d - 1] = c[:, 1:] * np.arange(1, d)[None, :]
        return Poly2(out, self.center)

    def grad(self):
        return self.dx(), self.dy()

    def laplacian(self) -> "Poly2":
        return self.dx().dx() + self.dy().dy()

    def grad_eval(self, pts):
        gx, gy = self.grad()
        return np.stack([gx.eval(pts), gy.eval(pts)], axis=-1)

    def homogeneous_parts(self) -> list:
        return homogeneous_decompose(self)

    def __repr__(self):
        t = ", ".join(f"{v:.6g}*x^{a}y^{b}" for (a, b), v in sorted(self.terms().items()))
        return f"Poly2({t or '0'} @ {self.center})"


def poly_eval(p: Poly2, pt):
    return p.eval(pt)


def poly_grad(p: Poly2):
    return p.grad()


def poly_laplacian(p: Poly2) -> Poly2:
    return p.laplacian()


@dataclass(frozen=True, eq=False)
class HomogeneousPart:
    degree: int
    poly: Poly2


def homogeneous_decompose(p: Poly2) -> list:
    """Split ``p`` into homogeneous parts (in powers of ``x - center``)."""
    parts = []
    c = p.coef
    d = c.shape[0]
    for j in range(d):
        pc = np.zeros_like(c)
        for a in range(j + 1):
            pc[a, j - a] = c[a, j - a]
        if np.any(pc):
            parts.append(HomogeneousPart(j, Poly2(pc, p.center)))
    return parts


def anti_laplacian(p: Poly2) -> Poly2:
    """A polynomial ``q`` with ``laplacian(q) == p``.

    Each homogeneous part of degree j (about p's center) is lifted by the
    finite sum over k <= j//2 of
    ``(-1)^k (j-k)! / ((j+1)! (k+1)!) * (|x|^2/4)^(k+1) * Lap^k p_j``.
    """
    out = Poly2.const(0.0, p.center)
    r2 = Poly2.from_dict({(2, 0): 0.25, (0, 2): 0.25}, p.center)
    for part in homogeneous_decompose(p):
        j = part.degree
        lap = part.poly
        rk = r2
        acc = Poly2.const(0.0, p.center)
        for k in range(j // 2 + 1):
            coef = (-1) ** k * math.factorial(j - k) / (math.factorial(j + 1) * math.factorial(k + 1))
            acc = acc + coef * (rk * lap)
            lap = lap.laplacian()
            rk = rk * r2
        out = out + acc
    return out
