"""Parametric edge curves on t in [0, 1].

Every curve gives position, first and second derivatives analytically, plus
``delta`` which returns ``x(t) - x(end)`` computed without cancellation when
``t`` is extremely close to that endpoint (graded boundary grids put nodes
within 1e-18 of a corner).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


def _as_t(t):
    t = np.asarray(t, dtype=float)
    if np.any(t < -1e-14) or np.any(t > 1 + 1e-14):
        raise ValueError("curve parameter outside [0, 1]")
    return t


def _right_normal(a, b):
    d = np.asarray(b, float) - np.asarray(a, float)
    return np.array([d[1], -d[0]]) / math.hypot(*d)


class Curve:
    """Base protocol. Subclasses implement ``_pos``, ``_vel``, ``_acc``."""

    kind = "curve"

    def position(self, t):
        return self._pos(_as_t(t))

    def velocity(self, t):
        return self._vel(_as_t(t))

    def acceleration(self, t):
        return self._acc(_as_t(t))

    def eval(self, t, order=0):
        if order == 0:
            return self.position(t)
        if order == 1:
            return self.velocity(t)
        if order == 2:
            return self.acceleration(t)
        raise ValueError(f"order must be 0, 1 or 2, got {order}")

    def delta(self, s, end):
        """``x(t) - x(end)`` where ``s`` is the parameter distance to ``end``."""
        s = np.asarray(s, float)
        t = s if end == 0 else 1.0 - s
        return self._pos(t) - self._pos(np.full_like(t, float(end)))

    @property
    def start(self):
        return self._pos(np.array(0.0))

    @property
    def end(self):
        return self._pos(np.array(1.0))

    def reversed_ok(self):
        return True

    def to_dict(self) -> dict:
        raise NotImplementedError

    def translated(self, shift) -> "Curve":
        raise NotImplementedError


def _stack(x, y):
    return np.stack(np.broadcast_arrays(x, y), axis=-1)


@dataclass(frozen=True)
class Line(Curve):
    a: tuple
    b: tuple
    kind = "line"

    def _pos(self, t):
        a, b = np.asarray(self.a), np.asarray(self.b)
        return a + t[..., None] * (b - a)

    def _vel(self, t):
        d = np.asarray(self.b, float) - np.asarray(self.a, float)
        return np.broadcast_to(d, t.shape + (2,)).copy()

    def _acc(self, t):
        return np.zeros(t.shape + (2,))

    def delta(self, s, end):
        s = np.asarray(s, float)
        d = np.asarray(self.b, float) - np.asarray(self.a, float)
        sign = 1.0 if end == 0 else -1.0
        return sign * s[..., None] * d

    def to_dict(self):
        return {"kind": "line", "a": list(self.a), "b": list(self.b)}

    def translated(self, shift):
        return Line(tuple(np.add(self.a, shift)), tuple(np.add(self.b, shift)))


@dataclass(frozen=True)
class CircularArc(Curve):
    """Arc ``center + radius * (cos th, sin th)``, th from theta0 to theta1."""

    center: tuple
    radius: float
    theta0: float
    theta1: float
    kind = "arc"

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("arc radius must be positive")
        if self.theta0 == self.theta1:
            raise ValueError("degenerate arc")

    @property
    def sweep(self):
        return self.theta1 - self.theta0

    def _theta(self, t):
        return self.theta0 + t * self.sweep

    def _pos(self, t):
        th = self._theta(t)
        c = np.asarray(self.center, float)
        return c + self.radius * _stack(np.cos(th), np.sin(th))

    def _vel(self, t):
        th = self._theta(t)
        k = self.radius * self.sweep
        return k * _stack(-np.sin(th), np.cos(th))

    def _acc(self, t):
        th = self._theta(t)
        k = self.radius * self.sweep**2
        return -k * _stack(np.cos(th), np.sin(th))

    def delta(self, s, end):
        s = np.asarray(s, float)
        if end == 0:
            base, ds = self.theta0, s * self.sweep
        else:
            base, ds = self.theta1, -s * self.sweep
        # R (e^{i(base+ds)} - e^{i base}) = 2 i R sin(ds/2) e^{i(base + ds/2)}
        mag = 2.0 * self.radius * np.sin(ds / 2)
        ph = base + ds / 2
        return _stack(-mag * np.sin(ph), mag * np.cos(ph))

    @classmethod
    def through(cls, center, p0, p1, ccw=True):
        """Arc about ``center`` from ``p0`` to ``p1`` (shorter way if ccw flag matches)."""
        c = np.asarray(center, float)
        r0 = np.asarray(p0, float) - c
        r1 = np.asarray(p1, float) - c
        rad = math.hypot(*r0)
        if abs(math.hypot(*r1) - rad) > 1e-12 * max(rad, 1.0):
            raise ValueError("endpoints not equidistant from center")
        th0 = math.atan2(r0[1], r0[0])
        th1 = math.atan2(r1[1], r1[0])
        if ccw:
            while th1 <= th0:
                th1 += 2 * math.pi
        else:
            while th1 >= th0:
                th1 -= 2 * math.pi
        return cls(tuple(c), rad, th0, th1)

    def to_dict(self):
        return {"kind": "arc", "center": list(self.center), "radius": self.radius,
                "theta0": self.theta0, "theta1": self.theta1}

    def translated(self, shift):
        return CircularArc(tuple(np.add(self.center, shift)), self.radius,
                           self.theta0, self.theta1)


@dataclass(frozen=True)
class SinePerturbedLine(Curve):
    """Chord a->b displaced by ``amplitude * sin(halfwaves*pi*t)`` along the right normal.

    The right normal of a->b is the outward normal for a counter-clockwise cell
    traversing a->b, so positive amplitude bulges out of that cell first.
    """

    a: tuple
    b: tuple
    amplitude: float
    halfwaves: int
    kind = "sine"

    def __post_init__(self):
        if self.halfwaves < 1:
            raise ValueError("halfwaves must be a positive integer")

    def _frame(self):
        a, b = np.asarray(self.a, float), np.asarray(self.b, float)
        return a, b - a, _right_normal(a, b)

    def _pos(self, t):
        a, d, nrm = self._frame()
        k = self.halfwaves * math.pi
        return a + t[..., None] * d + (self.amplitude * np.sin(k * t))[..., None] * nrm

    def _vel(self, t):
        _, d, nrm = self._frame()
        k = self.halfwaves * math.pi
        return d + (self.amplitude * k * np.cos(k * t))[..., None] * nrm

    def _acc(self, t):
        _, _, nrm = self._frame()
        k = self.halfwaves * math.pi
        return (-self.amplitude * k * k * np.sin(k * t))[..., None] * nrm

    def delta(self, s, end):
        s = np.asarray(s, float)
        _, d, nrm = self._frame()
        k = self.halfwaves * math.pi
        if end == 0:
            return s[..., None] * d + (self.amplitude * np.sin(k * s))[..., None] * nrm
        sgn = 1.0 if self.halfwaves % 2 == 1 else -1.0
        return -s[..., None] * d + (sgn * self.amplitude * np.sin(k * s))[..., None] * nrm

    def to_dict(self):
        return {"kind": "sine", "a": list(self.a), "b": list(self.b),
                "amplitude": self.amplitude, "halfwaves": self.halfwaves}

    def translated(self, shift):
        return SinePerturbedLine(tuple(np.add(self.a, shift)), tuple(np.add(self.b, shift)),
                                 self.amplitude, self.halfwaves)


@dataclass(frozen=True)
class FunctionCurve(Curve):
    """Arbitrary curve from callables; used for one-off edges such as the hyperbola."""

    pos: Callable = field(repr=False)
    vel: Callable = field(repr=False)
    acc: Callable = field(repr=False)
    name: str = "function"
    kind = "function"

    def _pos(self, t):
        return np.asarray(self.pos(t), float)

    def _vel(self, t):
        return np.asarray(self.vel(t), float)

    def _acc(self, t):
        return np.asarray(self.acc(t), float)

    def to_dict(self):
        return {"kind": "function", "name": self.name}


def hyperbola_edge(t0=0.0, t1=1.0):
    """The edge ``(cosh t, sinh(t)/2)``, part of ``x^2 - 4 y^2 = 1``."""
    L = t1 - t0

    def pos(t):
        s = t0 + L * np.asarray(t, float)
        return _stack(np.cosh(s), np.sinh(s) / 2)

    def vel(t):
        s = t0 + L * np.asarray(t, float)
        return L * _stack(np.sinh(s), np.cosh(s) / 2)

    def acc(t):
        s = t0 + L * np.asarray(t, float)
        return L * L * _stack(np.cosh(s), np.sinh(s) / 2)

    return FunctionCurve(pos, vel, acc, name="hyperbola")


def curve_from_dict(d: dict) -> Curve:
    kind = d["kind"]
    if kind == "line":
        return Line(tuple(d["a"]), tuple(d["b"]))
    if kind == "arc":
        return CircularArc(tuple(d["center"]), float(d["radius"]),
                           float(d["theta0"]), float(d["theta1"]))
    if kind == "sine":
        return SinePerturbedLine(tuple(d["a"]), tuple(d["b"]), float(d["amplitude"]),
                                 int(d["halfwaves"]))
    if kind == "function" and d.get("name") == "hyperbola":
        return hyperbola_edge()
    raise ValueError(f"unknown curve kind {kind!r}")


def edge_eval(curve: Curve, t, order=0):
    """Position (order 0), velocity (1) or acceleration (2) of ``curve`` at ``t``."""
    t = np.asarray(t, float)
    if np.any(t < 0) or np.any(t > 1):
        raise ValueError("t must lie in [0, 1]")
    return curve.eval(t, order)
