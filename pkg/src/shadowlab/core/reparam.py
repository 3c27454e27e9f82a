"""Strictly increasing time changes fixing the origin.

A :class:`Reparam` is piecewise linear through its anchors and affine outside them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Reparam"]


@dataclass(frozen=True)
class Reparam:
    times: np.ndarray
    values: np.ndarray
    left_slope: float = 1.0
    right_slope: float = 1.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)
        if t.shape != v.shape or t.ndim != 1 or t.size == 0:
            raise ValueError("anchors must be two equal-length 1-D arrays")
        if t.size > 1 and (np.any(np.diff(t) <= 0) or np.any(np.diff(v) <= 0)):
            raise ValueError("anchors must be strictly increasing")
        if self.left_slope <= 0 or self.right_slope <= 0:
            raise ValueError("tail slopes must be positive")
        k = np.searchsorted(t, 0.0)
        if k >= t.size or t[k] != 0.0 or v[k] != 0.0:
            raise ValueError("anchors must contain (0, 0)")

    @classmethod
    def identity(cls) -> "Reparam":
        return cls(np.array([0.0]), np.array([0.0]))

    @classmethod
    def linear(cls, slope: float) -> "Reparam":
        return cls(np.array([0.0]), np.array([0.0]), slope, slope)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        T, V = self.times, self.values
        out = np.interp(t, T, V)
        out = np.where(t < T[0], V[0] + self.left_slope * (t - T[0]), out)
        out = np.where(t > T[-1], V[-1] + self.right_slope * (t - T[-1]), out)
        return out if out.ndim else float(out)

    def inverse(self, u):
        u = np.asarray(u, dtype=float)
        T, V = self.times, self.values
        out = np.interp(u, V, T)
        out = np.where(u < V[0], T[0] + (u - V[0]) / self.left_slope, out)
        out = np.where(u > V[-1], T[-1] + (u - V[-1]) / self.right_slope, out)
        return out if out.ndim else float(out)

    def slopes(self) -> np.ndarray:
        """Segment slopes from the left tail to the right tail."""
        inner = np.diff(self.values) / np.diff(self.times) if self.times.size > 1 else np.array([])
        return np.concatenate([[self.left_slope], inner, [self.right_slope]])

    def shift(self, c: float) -> "Reparam":
        """``g(t) = h(t + c) - h(c)``."""
        c = float(c)
        hc = float(self(c))
        t = self.times - c
        v = self.values - hc
        scale = max(1.0, abs(c), float(np.max(np.abs(self.times))))
        keep = np.abs(t) > 1e-13 * scale
        t, v = t[keep], v[keep]
        k = np.searchsorted(t, 0.0)
        t = np.insert(t, k, 0.0)
        v = np.insert(v, k, 0.0)
        # drop anchors made non-monotone by rounding next to the new origin
        good = np.ones(t.size, dtype=bool)
        if k > 0 and v[k - 1] >= 0:
            good[k - 1] = False
        if k + 1 < t.size and v[k + 1] <= 0:
            good[k + 1] = False
        return Reparam(t[good], v[good], self.left_slope, self.right_slope)

    def to_dict(self) -> dict:
        return {"times": self.times.tolist(), "values": self.values.tolist(),
                "left_slope": self.left_slope, "right_slope": self.right_slope}

    @classmethod
    def from_dict(cls, d: dict) -> "Reparam":
        return cls(np.array(d["times"], float), np.array(d["values"], float),
                   float(d.get("left_slope", 1.0)), float(d.get("right_slope", 1.0)))
