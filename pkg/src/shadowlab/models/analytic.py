"""Flows with closed-form solutions on the circle, the torus and finite sets."""
from __future__ import annotations

import numpy as np

from ..core.flow import FlowSystem
from ..core.spaces import Circle, FlatTorus, FiniteSpace, MetricSpace
from ..pseudo_orbit import DriftKick

TWO_PI = 2.0 * np.pi


class RotationFlow(FlowSystem):
    """Unit-speed rotation of the circle."""

    def __init__(self):
        super().__init__("rotation", Circle(), speed_bound=1.0)

    def flow(self, points, times):
        return self.space.canonical(np.asarray(points, float) + np.asarray(times, float)[:, None])

    def lipschitz(self, t):
        return 1.0

    def adversaries(self):
        return [DriftKick([1.0], "drift+")]


class SinSquaredFlow(FlowSystem):
    """``theta' = sin(theta)^2`` with ``theta = 2 pi u``; fixed points at ``u = 0`` and ``u = 1/2``.

    On each open half circle ``cot(theta)`` decreases at unit rate, which gives the closed form.
    """

    def __init__(self):
        super().__init__("sin2", Circle(), speed_bound=1.0 / TWO_PI)

    def flow(self, points, times):
        u = np.asarray(points, float)[:, 0]
        t = np.asarray(times, float)
        half = np.floor(2.0 * u)
        w = 2.0 * u - half
        fixed = w == 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            cot = 1.0 / np.tan(np.pi * np.where(fixed, 0.5, w))
        w_new = np.arctan2(1.0, cot - t) / np.pi
        w_new = np.where(fixed, 0.0, w_new)
        return self.space.canonical(((half + w_new) / 2.0)[:, None])

    def lipschitz(self, t):
        return float(np.exp(abs(t)))

    def adversaries(self):
        return [DriftKick([1.0], "drift+")]


class NorthSouthFlow(FlowSystem):
    """``theta' = sin(theta)``: source at ``u = 0``, sink at ``u = 1/2``; ``tan(theta/2)`` grows like ``e^t``."""

    def __init__(self):
        super().__init__("north-south", Circle(), speed_bound=1.0 / TWO_PI)

    def flow(self, points, times):
        u = np.asarray(points, float)[:, 0]
        t = np.clip(np.asarray(times, float), -700.0, 700.0)
        v = u - np.round(u)  # in [-1/2, 1/2]
        sink = np.abs(v) == 0.5
        tv = np.tan(np.pi * np.where(sink, 0.25, v))
        v_new = np.arctan(tv * np.exp(t)) / np.pi
        v_new = np.where(sink, 0.5, v_new)
        return self.space.canonical(v_new[:, None])

    def lipschitz(self, t):
        return float(np.exp(abs(t)))

    def adversaries(self):
        return [DriftKick([1.0], "drift+"), DriftKick([-1.0], "drift-")]


class LinearTorusFlow(FlowSystem):
    """``(u, v) -> (u + a t, v + b t)`` on the flat torus."""

    def __init__(self, a=1.0, b=1.0, name="linear-torus"):
        a, b = float(a), float(b)
        super().__init__(name, FlatTorus(), speed_bound=float(np.hypot(a, b)))
        self.velocity = np.array([a, b])
        self.params = {"a": a, "b": b}

    def flow(self, points, times):
        return self.space.canonical(np.asarray(points, float) + np.asarray(times, float)[:, None] * self.velocity)

    def lipschitz(self, t):
        return 1.0

    def adversaries(self):
        a, b = self.velocity
        return [DriftKick([-b, a], "transverse")]


class IdentityFlow(FlowSystem):
    """Every point is fixed."""

    def __init__(self, space: MetricSpace, name="identity"):
        super().__init__(name, space, speed_bound=0.0)

    def flow(self, points, times):
        return np.array(points, dtype=float)

    def lipschitz(self, t):
        return 1.0


def rotation() -> RotationFlow:
    return RotationFlow()


def sin_squared() -> SinSquaredFlow:
    return SinSquaredFlow()


def north_south() -> NorthSouthFlow:
    return NorthSouthFlow()


def product_rotation() -> LinearTorusFlow:
    return LinearTorusFlow(1.0, 1.0, name="product-rotation")


def irrational_linear(alpha: float = (np.sqrt(5.0) - 1.0) / 2.0) -> LinearTorusFlow:
    f = LinearTorusFlow(1.0, alpha, name="irrational-linear")
    f.params = {"alpha": float(alpha)}
    return f


def two_point_identity() -> IdentityFlow:
    return IdentityFlow(FiniteSpace([0.0, 1.0]), name="two-point-identity")
