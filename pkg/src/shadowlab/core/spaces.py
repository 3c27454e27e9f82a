"""Compact metric spaces used as phase spaces.

Points are 1-D float arrays of length ``dim``; batches are ``(n, dim)`` arrays.
Every space keeps its diameter at most 1.
"""
from __future__ import annotations

import itertools

import numpy as np
from numba import njit
from scipy.stats import qmc

__all__ = [
    "MetricSpace",
    "ChartSpace",
    "Circle",
    "FlatTorus",
    "EuclideanBox",
    "LineSubsetSpace",
    "FiniteSpace",
    "CantorIntervalSpace",
    "cantor_endpoints",
]


@njit(cache=True, nogil=True)
def _chart_pairwise(A, B, period, periodic, scale):
    # inputs are canonical, so one wrap suffices on periodic axes
    n, d = A.shape
    m = B.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for k in range(d):
                g = abs(A[i, k] - B[j, k])
                if periodic[k]:
                    if g >= period[k]:
                        g = g % period[k]
                    if period[k] - g < g:
                        g = period[k] - g
                if d == 1:
                    acc = g
                else:
                    acc += g * g
            out[i, j] = scale * (acc if d == 1 else np.sqrt(acc))
    return out


def _as_batch(points, dim):
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, dim) if dim > 1 or arr.size != 1 else arr.reshape(1, 1)
    return arr


class MetricSpace:
    """Base class. Subclasses implement ``_gaps`` or override ``pairwise``/``paired``."""

    name = "space"
    dim = 1
    diameter = 1.0
    chart_lo: np.ndarray
    chart_hi: np.ndarray
    periodic: tuple

    def canonical(self, points):
        return np.asarray(points, dtype=float)

    def pairwise(self, A, B):
        raise NotImplementedError

    def paired(self, A, B):
        raise NotImplementedError

    def dist(self, p, q) -> float:
        p = np.asarray(p, dtype=float).reshape(1, self.dim)
        q = np.asarray(q, dtype=float).reshape(1, self.dim)
        return float(self.paired(p, q)[0])

    def contains(self, points):
        raise NotImplementedError

    def sample(self, n: int, seed: int = 0):
        raise NotImplementedError

    def ball_grid(self, center, radius: float, spacing: float):
        raise NotImplementedError

    def perturb(self, center, radius: float, rng):
        raise NotImplementedError

    def displace(self, point, vector):
        raise NotImplementedError

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "diameter": self.diameter}


class ChartSpace(MetricSpace):
    """A box in R^d, some axes periodic, with metric ``scale * euclid(axis gaps)``."""

    def __init__(self, lo, hi, periodic, scale=1.0, name="chart"):
        self.chart_lo = np.asarray(lo, dtype=float)
        self.chart_hi = np.asarray(hi, dtype=float)
        self.dim = len(self.chart_lo)
        self.periodic = tuple(bool(p) for p in periodic)
        self.scale = float(scale)
        self.name = name
        self._pmask = np.array(self.periodic)
        self._period = self.chart_hi - self.chart_lo
        half = np.where(self._pmask, self._period / 2, self._period)
        self.diameter = self.scale * float(np.sqrt(np.sum(half**2)))
        self._injectivity = float(np.min(np.where(self._pmask, self._period / 2, np.inf)))

    def _gaps(self, diff):
        diff = np.abs(diff)
        if self._pmask.any():
            m = self._pmask
            per = self._period[m]
            wrapped = np.mod(diff[..., m], per)
            diff[..., m] = np.minimum(wrapped, per - wrapped)
        return diff

    def _combine(self, gaps):
        if self.dim == 1:
            return self.scale * gaps[..., 0]
        return self.scale * np.sqrt(np.sum(gaps * gaps, axis=-1))

    def pairwise(self, A, B):
        A = np.ascontiguousarray(A, dtype=float).reshape(-1, self.dim)
        B = np.ascontiguousarray(B, dtype=float).reshape(-1, self.dim)
        return _chart_pairwise(A, B, self._period, self._pmask, self.scale)

    def paired(self, A, B):
        return self._combine(self._gaps(np.asarray(A, float) - np.asarray(B, float)))

    def canonical(self, points):
        pts = np.array(points, dtype=float)
        if self._pmask.any():
            m = self._pmask
            pts[..., m] = self.chart_lo[m] + np.mod(pts[..., m] - self.chart_lo[m], self._period[m])
            # mod can land exactly on the upper end through rounding
            over = pts[..., m] >= self.chart_hi[m]
            if np.any(over):
                sub = pts[..., m]
                sub[over] = np.broadcast_to(self.chart_lo[m], sub.shape)[over]
                pts[..., m] = sub
        return pts

    def contains(self, points):
        pts = _as_batch(points, self.dim)
        ok = np.ones(len(pts), dtype=bool)
        for k in range(self.dim):
            if not self.periodic[k]:
                ok &= (pts[:, k] >= self.chart_lo[k] - 1e-12) & (pts[:, k] <= self.chart_hi[k] + 1e-12)
        return ok

    def sample(self, n, seed=0):
        u = qmc.Halton(d=self.dim, scramble=True, seed=seed).random(n)
        return self.canonical(self.chart_lo + u * (self.chart_hi - self.chart_lo))

    def ball_grid(self, center, radius, spacing):
        center = np.asarray(center, dtype=float).reshape(self.dim)
        step = spacing / self.scale
        k = int(np.floor(radius / spacing + 1e-9))
        offsets = [np.zeros(self.dim)]
        for idx in itertools.product(range(-k, k + 1), repeat=self.dim):
            if not any(idx):
                continue
            off = np.array(idx, dtype=float) * step
            if self.scale * np.sqrt(np.sum(off * off)) <= radius * (1 + 1e-12):
                offsets.append(off)
        grid = self.canonical(center[None, :] + np.array(offsets))
        # bounded axes: keep the part of the ball inside the space (the center always stays)
        inside = self.contains(grid)
        inside[0] = True
        return grid[inside]

    def perturb(self, center, radius, rng):
        center = np.asarray(center, dtype=float).reshape(self.dim)
        if radius <= 0:
            return center.copy()
        r = min(radius, self.scale * self._injectivity * 0.999)
        v = rng.standard_normal(self.dim)
        v /= np.linalg.norm(v) or 1.0
        v *= r * rng.random() ** (1.0 / self.dim) / self.scale
        q = self.canonical(center + v)
        if not self._pmask.all():
            # pull back along the segment until inside; the center is inside
            for _ in range(60):
                if self.contains(q[None, :])[0]:
                    break
                v *= 0.5
                q = self.canonical(center + v)
            else:
                q = center.copy()
        return q

    def displace(self, point, vector):
        return self.canonical(np.asarray(point, float) + np.asarray(vector, float))

    def describe(self):
        d = super().describe()
        d.update(lo=self.chart_lo.tolist(), hi=self.chart_hi.tolist(), periodic=list(self.periodic), scale=self.scale)
        return d


class Circle(ChartSpace):
    """[0, 1) with the arc metric."""

    def __init__(self):
        super().__init__([0.0], [1.0], [True], name="circle")


class FlatTorus(ChartSpace):
    """[0, 1)^2 with the flat metric, the Euclidean combination of two arc distances."""

    def __init__(self):
        super().__init__([0.0, 0.0], [1.0, 1.0], [True, True], name="flat-torus")


class EuclideanBox(ChartSpace):
    def __init__(self, lo, hi, name="box"):
        super().__init__(lo, hi, [False] * len(lo), name=name)
        if self.diameter > 1 + 1e-12:
            raise ValueError(f"box diameter {self.diameter} exceeds 1")


class LineSubsetSpace(MetricSpace):
    """A compact subset of the line: finitely many points plus closed intervals.

    The metric is ``scale * |x - y|``.
    """

    def __init__(self, points, intervals=(), scale=1.0, name="line-subset"):
        self.points = np.unique(np.asarray(points, dtype=float))
        self.intervals = [tuple(map(float, iv)) for iv in intervals]
        self.scale = float(scale)
        self.name = name
        self.dim = 1
        parts = [self.points] + [np.array(iv) for iv in self.intervals]
        allv = np.concatenate([p for p in parts if p.size])
        self.chart_lo = np.array([allv.min()])
        self.chart_hi = np.array([allv.max()])
        self.periodic = (False,)
        self.diameter = self.scale * float(allv.max() - allv.min())
        if self.diameter > 1 + 1e-12:
            raise ValueError(f"diameter {self.diameter} exceeds 1")

    def pairwise(self, A, B):
        A = np.asarray(A, float)
        B = np.asarray(B, float)
        return self.scale * np.abs(A[:, 0][:, None] - B[:, 0][None, :])

    def paired(self, A, B):
        return self.scale * np.abs(np.asarray(A, float)[..., 0] - np.asarray(B, float)[..., 0])

    def _in_intervals(self, x):
        ok = np.zeros(np.shape(x), dtype=bool)
        for a, b in self.intervals:
            ok |= (x >= a - 1e-12) & (x <= b + 1e-12)
        return ok

    def contains(self, points):
        x = _as_batch(points, 1)[:, 0]
        ok = self._in_intervals(x)
        if self.points.size:
            j = np.clip(np.searchsorted(self.points, x), 1, len(self.points) - 1) if len(self.points) > 1 else np.zeros(len(x), int)
            near = np.minimum(np.abs(self.points[j] - x), np.abs(self.points[np.maximum(j - 1, 0)] - x))
            ok |= near <= 1e-12
        return ok

    def sample(self, n, seed=0):
        rng = np.random.default_rng(seed)
        n_iv = 0 if not self.intervals else (n // 2 if self.points.size else n)
        n_pt = n - n_iv
        out = []
        if n_pt:
            pick = rng.choice(len(self.points), size=n_pt, replace=n_pt > len(self.points))
            out.append(self.points[np.sort(pick)])
        if n_iv:
            lens = np.array([b - a for a, b in self.intervals])
            u = qmc.Halton(d=1, scramble=True, seed=seed).random(n_iv)[:, 0] * lens.sum()
            edges = np.concatenate([[0.0], np.cumsum(lens)])
            which = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(lens) - 1)
            starts = np.array([a for a, _ in self.intervals])
            out.append(starts[which] + (u - edges[which]))
        return np.concatenate(out).reshape(-1, 1)

    def ball_grid(self, center, radius, spacing):
        c = float(np.asarray(center).reshape(-1)[0])
        R = radius / self.scale
        step = spacing / self.scale
        cands = []
        pts = self.points[(np.abs(self.points - c) <= R * (1 + 1e-12)) & (self.points != c)]
        cands.extend(pts.tolist())
        for a, b in self.intervals:
            lo, hi = max(a, c - R), min(b, c + R)
            if lo > hi:
                continue
            anchor = c if a <= c <= b else (a if c < a else b)
            k0 = int(np.ceil((lo - anchor) / step - 1e-9))
            k1 = int(np.floor((hi - anchor) / step + 1e-9))
            for k in range(k0, k1 + 1):
                v = anchor + k * step
                if abs(v - c) <= R * (1 + 1e-12) and v != c:
                    cands.append(min(max(v, a), b))
        uniq = sorted(set(cands))
        return np.array([c] + uniq, dtype=float).reshape(-1, 1)

    def perturb(self, center, radius, rng):
        c = float(np.asarray(center).reshape(-1)[0])
        R = radius / self.scale
        pts = self.points[np.abs(self.points - c) <= R]
        pieces = []
        for a, b in self.intervals:
            lo, hi = max(a, c - R), min(b, c + R)
            if lo <= hi:
                pieces.append((lo, hi))
        use_iv = bool(pieces) and (pts.size == 0 or rng.random() < 0.5)
        if use_iv:
            lens = np.array([hi - lo for lo, hi in pieces])
            if lens.sum() <= 0:
                return np.array([pieces[0][0]])
            u = rng.random() * lens.sum()
            k = min(int(np.searchsorted(np.cumsum(lens), u)), len(pieces) - 1)
            lo, hi = pieces[k]
            return np.array([min(max(lo + u - (np.cumsum(lens)[k] - lens[k]), lo), hi)])
        if pts.size == 0:
            return np.array([c])
        return np.array([pts[rng.integers(len(pts))]])

    def displace(self, point, vector):
        """Farthest point of the set on the segment from ``point`` to ``point + vector``."""
        c = float(np.asarray(point).reshape(-1)[0])
        v = float(np.asarray(vector).reshape(-1)[0])
        lo, hi = min(c, c + v), max(c, c + v)
        best = c
        inside = self.points[(self.points >= lo) & (self.points <= hi)]
        if inside.size:
            far = inside[np.argmax(np.abs(inside - c))]
            if abs(far - c) > abs(best - c):
                best = far
        for a, b in self.intervals:
            if max(a, lo) <= min(b, hi):
                edge = min(b, hi) if v > 0 else max(a, lo)
                if abs(edge - c) > abs(best - c):
                    best = edge
        return np.array([best])

    def describe(self):
        d = super().describe()
        d.update(n_points=int(self.points.size), intervals=self.intervals, scale=self.scale)
        return d


class FiniteSpace(LineSubsetSpace):
    def __init__(self, points, scale=1.0, name="finite"):
        super().__init__(points, (), scale=scale, name=name)


def cantor_endpoints(level: int) -> np.ndarray:
    """Endpoints of the ``2**level`` closed intervals of the middle-thirds construction."""
    ivs = [(0.0, 1.0)]
    for _ in range(level):
        nxt = []
        for a, b in ivs:
            w = (b - a) / 3.0
            nxt.append((a, a + w))
            nxt.append((b - w, b))
        ivs = nxt
    return np.unique(np.array([v for iv in ivs for v in iv]))


class CantorIntervalSpace(LineSubsetSpace):
    """Finite Cantor approximation union the interval [1, 2], metric |x - y| / 2."""

    def __init__(self, level: int = 6):
        self.level = int(level)
        super().__init__(cantor_endpoints(self.level), [(1.0, 2.0)], scale=0.5, name=f"cantor-interval-{level}")

    @property
    def gap(self) -> float:
        """Smallest distance between distinct points of the finite part, in the metric."""
        return self.scale * 3.0 ** (-self.level)
