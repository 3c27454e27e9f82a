"""Flows on compact metric spaces."""
from __future__ import annotations

import numpy as np

from ..errors import HorizonError
from .spaces import MetricSpace

__all__ = ["FlowSystem", "evaluate_flow", "group_defect", "check_flow_axioms", "check_metric_axioms"]


class FlowSystem:
    """A continuous flow ``phi_t`` on ``space``.

    Subclasses implement :meth:`flow`, the elementwise map ``(points[k], times[k]) -> phi_{times[k]}(points[k])``.
    ``speed_bound`` bounds ``d(phi_s x, phi_t x) / |s - t|`` for small ``|s - t|``; the
    shadowing search uses it to relate time steps to distances.
    """

    kind = "analytic"
    invertible = True

    def __init__(self, name: str, space: MetricSpace, speed_bound: float, *,
                 group_tolerance: float = 1e-12, horizon: float = 1e5):
        self.name = name
        self.space = space
        self.speed_bound = float(speed_bound)
        self.group_tolerance = float(group_tolerance)
        self.horizon = float(horizon)
        self.params: dict = {}

    # subclasses
    def flow(self, points, times):
        raise NotImplementedError

    def lipschitz(self, t: float) -> float:
        """Bound on the Lipschitz constant of ``phi_s`` for ``|s| <= |t|``."""
        return float("inf")

    def adversaries(self) -> list:
        """Model-specific kick strategies used by the estimators in addition to uniform noise."""
        return []

    # shared
    def _check_times(self, times):
        times = np.asarray(times, dtype=float)
        if times.size and np.max(np.abs(times)) > self.horizon:
            raise HorizonError(f"|t| = {np.max(np.abs(times)):.6g} exceeds horizon {self.horizon:.6g} for {self.name}")
        if not self.invertible and times.size and np.min(times) < 0:
            raise HorizonError(f"{self.name} is evaluated forward in time only")
        return times

    def evolve_many(self, x, times):
        """``phi_t(x)`` for every ``t`` in ``times`` (one start point)."""
        times = self._check_times(times)
        x = np.asarray(x, dtype=float).reshape(self.space.dim)
        pts = np.broadcast_to(x, (times.size, self.space.dim))
        return self.flow(pts, times)

    def evolve(self, x, t):
        return self.evolve_many(x, np.array([float(t)]))[0]

    def evolve_pointwise(self, points, times):
        points = np.asarray(points, dtype=float).reshape(-1, self.space.dim)
        times = self._check_times(np.broadcast_to(np.asarray(times, float), (len(points),)))
        return self.flow(points, times)

    def modulus(self, r: float, t: float) -> float:
        """Continuity modulus: ``d(x, y) <= r`` implies ``d(phi_s x, phi_s y) <= modulus(r, t)`` for ``|s| <= |t|``."""
        return min(self.lipschitz(t) * r, self.space.diameter)

    def inverse_modulus(self, eps: float, t: float) -> float:
        """Largest ``r`` with ``modulus(r, t) <= eps`` (for Lipschitz flows)."""
        L = self.lipschitz(t)
        return eps / L if np.isfinite(L) and L > 0 else 0.0

    def describe(self) -> dict:
        return {"name": self.name, "kind": self.kind, "space": self.space.describe(),
                "speed_bound": self.speed_bound, "group_tolerance": self.group_tolerance,
                "horizon": self.horizon, "params": dict(self.params)}


def evaluate_flow(system: FlowSystem, x, t):
    return system.evolve(x, t)


def group_defect(system: FlowSystem, x, s: float, t: float) -> float:
    """``d(phi_t(phi_s x), phi_{s+t} x)``."""
    a = system.evolve(system.evolve(x, s), t)
    b = system.evolve(x, s + t)
    return system.space.dist(a, b)


def check_flow_axioms(system: FlowSystem, n: int = 200, t_max: float = 4.0, seed: int = 0) -> dict:
    """Identity and group law on sampled points and times; returns the worst defects."""
    rng = np.random.default_rng(seed)
    pts = system.space.sample(n, seed=seed)
    lo = 0.0 if not system.invertible else -t_max
    s = rng.uniform(lo, t_max, n)
    t = rng.uniform(lo, t_max, n)
    ident = system.evolve_pointwise(pts, np.zeros(n))
    id_def = float(np.max(system.space.paired(ident, pts)))
    a = system.evolve_pointwise(system.evolve_pointwise(pts, s), t)
    b = system.evolve_pointwise(pts, s + t)
    grp = float(np.max(system.space.paired(a, b)))
    return {"identity_defect": id_def, "group_defect": grp,
            "ok": id_def <= system.group_tolerance and grp <= system.group_tolerance}


def check_metric_axioms(space: MetricSpace, n: int = 200, seed: int = 0, tol: float = 1e-12) -> dict:
    rng = np.random.default_rng(seed)
    pts = space.sample(n, seed=seed)
    D = space.pairwise(pts, pts)
    sym = float(np.max(np.abs(D - D.T)))
    diag = float(np.max(np.abs(np.diag(D))))
    neg = float(max(0.0, -np.min(D)))
    idx = rng.integers(0, n, size=(min(4000, n**3), 3))
    tri = D[idx[:, 0], idx[:, 2]] - D[idx[:, 0], idx[:, 1]] - D[idx[:, 1], idx[:, 2]]
    tri_v = float(max(0.0, np.max(tri)))
    diam = float(np.max(D))
    off = np.where(np.eye(n, dtype=bool), np.inf, D)
    dup = np.all(pts[:, None, :] == pts[None, :, :], axis=-1) & ~np.eye(n, dtype=bool)
    sep = bool(np.all((off > 0) | dup))
    return {"symmetry": sym, "identity": diag, "negativity": neg, "triangle": tri_v,
            "sampled_diameter": diam, "separation": sep,
            "ok": sym <= tol and diag <= tol and neg == 0 and tri_v <= tol and sep and diam <= space.diameter + tol}
