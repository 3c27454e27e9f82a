"""Lazily sampled orbits for the free-space search."""
from __future__ import annotations

import numpy as np

from ..core.flow import FlowSystem
from .kernels import thin_path


class OrbitCursor:
    """Samples of ``phi_{direction * s}(y)`` for ``s in [0, t_max]``, produced on demand.

    Fine samples are taken every ``dt_fine``; with ``ell > 0`` only a subset is kept so that
    the orbit path between consecutive kept samples has length at most ``ell`` (or is a
    single fine step). ``times`` holds the unsigned elapsed time of each kept sample.
    """

    def __init__(self, system: FlowSystem, y, direction: int, dt_fine: float, t_max: float,
                 ell: float = 0.0, chunk: int = 256, max_chunk: int = 16384):
        self.system = system
        self.space = system.space
        self.y = np.asarray(y, dtype=float).reshape(system.space.dim)
        self.direction = 1 if direction >= 0 else -1
        self.dt = float(dt_fine)
        self.t_max = float(t_max)
        self.ell = float(ell)
        self.chunk = int(chunk)
        self.max_chunk = int(max_chunk)
        self._continuation = system.kind == "integrated"
        cap = 1024
        self._pts = np.empty((cap, system.space.dim))
        self._t = np.empty(cap)
        self._pts[0] = self.y
        self._t[0] = 0.0
        self.count = 1
        self._fine_t = 0.0
        self._pending = self.y.copy()
        self._pending_t = 0.0
        self._pending_kept = True
        self._carry = 0.0
        self.exhausted = self.t_max <= 0 or system.speed_bound == 0.0
        self.evaluations = 0

    @property
    def points(self):
        return self._pts[: self.count]

    @property
    def times(self):
        return self._t[: self.count]

    def _append(self, pts, ts):
        need = self.count + len(ts)
        if need > len(self._t):
            cap = max(need, 2 * len(self._t))
            p = np.empty((cap, self.space.dim))
            t = np.empty(cap)
            p[: self.count] = self._pts[: self.count]
            t[: self.count] = self._t[: self.count]
            self._pts, self._t = p, t
        self._pts[self.count:need] = pts
        self._t[self.count:need] = ts
        self.count = need

    def _advance(self):
        remaining = self.t_max - self._fine_t
        n = int(min(self.chunk, np.ceil(remaining / self.dt - 1e-9)))
        n = max(n, 1)
        local = self.dt * np.arange(1, n + 1)
        last = self._fine_t + local[-1] >= self.t_max - 1e-12
        if last:
            local[-1] = remaining
        if self._continuation:
            fine = self.system.evolve_many(self._pending, self.direction * local)
        else:
            fine = self.system.evolve_many(self.y, self.direction * (self._fine_t + local))
        self.evaluations += n
        ft = self._fine_t + local
        if self.ell > 0:
            allp = np.vstack([self._pending[None, :], fine])
            steps = self.space.paired(allp[:-1], allp[1:])
            keep, self._carry = thin_path(steps, self.ell, self._carry)
            allt = np.concatenate([[self._pending_t], ft])
            sel = np.nonzero(keep)[0]
            if sel.size and sel[0] == 0 and self._pending_kept:
                sel = sel[1:]
            if sel.size:
                self._append(allp[sel], allt[sel])
            pending_kept = False
            if last:
                self._append(fine[-1:], ft[-1:])
                pending_kept = True
        else:
            self._append(fine, ft)
            pending_kept = True
        self._pending = fine[-1].copy()
        self._pending_t = float(ft[-1])
        self._pending_kept = pending_kept
        self._fine_t = float(ft[-1])
        if last:
            self.exhausted = True
        self.chunk = min(self.chunk * 2, self.max_chunk)

    def ensure(self, k: int) -> int:
        """Produce samples until index ``k`` exists or the time range is used up; returns the count."""
        while self.count <= k and not self.exhausted:
            self._advance()
        return self.count
