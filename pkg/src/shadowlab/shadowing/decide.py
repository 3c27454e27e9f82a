"""Deciding whether a pseudo-orbit is epsilon-shadowed, at a stated resolution.

For each candidate start ``y`` on a grid in the closed ``eps``-ball around ``x_0``, the
star trace of the pseudo-orbit and the orbit of ``y`` are sampled and a monotone
matching with every matched pair within ``eps`` is searched for by free-space
reachability. The path through the matching cell ``(t = 0, s = 0)`` fixes ``h(0) = 0``;
it is extended forward to the end of the trace and backward to its start.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from ..core.flow import FlowSystem
from ..core.reparam import Reparam
from ..errors import GridError, HorizonError, IntegrationError
from ..pseudo_orbit import PseudoOrbit, star_many, trace_grid
from .kernels import backtrack, sweep_block
from .orbits import OrbitCursor

__all__ = [
    "Outcome",
    "SearchConfig",
    "Certificate",
    "Verdict",
    "decide_shadowing",
    "decide_forward_shadowing",
    "check_certificate",
    "transport_certificate",
    "trace_step",
]


class Outcome(str, Enum):
    SHADOWED = "SHADOWED"
    NOT_SHADOWED = "NOT_SHADOWED_AT_RESOLUTION"
    UNKNOWN = "UNKNOWN"


@dataclass
class SearchConfig:
    dt: float | None = None
    grid_spacing: float | None = None
    time_stretch: float = 2.0
    time_pad: float = 1.0
    block_rows: int = 64
    max_cells: float = 4e8
    guard: float = 1e-9
    thin_orbit: bool = True
    exhaustive: bool = True
    threads: int | None = None

    def step(self, eps: float) -> float:
        return trace_step(eps, self.dt)

    def spacing(self, eps: float) -> float:
        return self.grid_spacing if self.grid_spacing else eps / 5.0

    def to_dict(self) -> dict:
        return asdict(self)


def trace_step(eps: float, dt: float | None = None) -> float:
    return float(dt) if dt else min(0.1, eps / 4.0)


@dataclass
class Certificate:
    y: np.ndarray
    h: Reparam
    achieved_sup: float
    time_grid: np.ndarray
    epsilon: float
    dt: float
    guarantee: float
    candidate_index: int = -1
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"y": np.asarray(self.y).tolist(), "h": self.h.to_dict(), "achieved_sup": self.achieved_sup,
                "time_grid": np.asarray(self.time_grid).tolist(), "epsilon": self.epsilon, "dt": self.dt,
                "guarantee": self.guarantee, "candidate_index": self.candidate_index, "meta": self.meta}

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        return cls(np.array(d["y"], float), Reparam.from_dict(d["h"]), float(d["achieved_sup"]),
                   np.array(d["time_grid"], float), float(d["epsilon"]), float(d["dt"]),
                   float(d["guarantee"]), int(d.get("candidate_index", -1)), dict(d.get("meta", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


@dataclass
class Verdict:
    outcome: Outcome
    certificate: Certificate | None = None
    log: dict = field(default_factory=dict)

    @property
    def shadowed(self) -> bool:
        return self.outcome is Outcome.SHADOWED

    def summary(self) -> dict:
        d = {"outcome": self.outcome.value}
        if self.certificate is not None:
            d["achieved_sup"] = self.certificate.achieved_sup
            d["candidate_index"] = self.certificate.candidate_index
        for k in ("reason", "candidates", "dt", "grid_spacing", "horizon_forward", "horizon_backward", "cells"):
            if k in self.log:
                d[k] = self.log[k]
        return d


# certificate replay --------------------------------------------------------

def check_certificate(system: FlowSystem, P: PseudoOrbit, eps: float, cert: Certificate,
                      dt_max: float | None = None, forward_only: bool | None = None):
    """Recompute ``max_t d(x_0 * t, phi_{h(t)}(y))`` on the certificate grid.

    Returns ``(ok, achieved_sup)``. Raises :class:`GridError` if the grid does not
    cover the pseudo-orbit window with steps of at most ``dt_max``.
    """
    dt_max = cert.dt if dt_max is None else dt_max
    grid = np.asarray(cert.time_grid, dtype=float)
    s = P.partial_sums()
    if forward_only is None:
        forward_only = bool(grid.size) and grid[0] >= 0 and P.index_low < 0
    start = 0.0 if forward_only else s[0]
    end = s[-1]
    tol = 1e-9 * max(1.0, abs(end), abs(start))
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise GridError("time grid must be non-empty and increasing")
    if grid[0] > start + tol or grid[-1] < end - dt_max - tol or grid[-1] >= end + tol or grid[0] < start - tol:
        raise GridError(f"time grid [{grid[0]:.6g}, {grid[-1]:.6g}] does not cover the window [{start:.6g}, {end:.6g})")
    if grid.size > 1 and np.max(np.diff(grid)) > dt_max * (1 + 1e-9):
        raise GridError(f"grid step {np.max(np.diff(grid)):.6g} exceeds {dt_max:.6g}")
    trace = star_many(P, system, grid)
    orbit = system.evolve_many(cert.y, cert.h(grid))
    sup = float(np.max(system.space.paired(trace, orbit)))
    return sup <= eps, sup


def transport_certificate(system: FlowSystem, cert: Certificate, chain_length: int, Z: PseudoOrbit) -> Certificate:
    """Certificate for the tail ``F`` of ``Z = prepend_chain(chain, F)``.

    With ``r = s_m`` the trace time where ``F`` starts, the new start is ``phi_{h(r)}(y)``
    and the new time change is ``t -> h(t + r) - h(r)``.
    """
    if chain_length == 0:
        return cert
    r = float(Z.partial_sums()[chain_length - Z.index_low])
    hr = float(cert.h(r))
    y2 = system.evolve(cert.y, hr)
    g = cert.h.shift(r)
    grid = np.asarray(cert.time_grid) - r
    tol = 1e-9 * max(1.0, r)
    grid = grid[grid >= -tol]
    if grid.size and abs(grid[0]) <= tol:
        grid[0] = 0.0
    return Certificate(y2, g, cert.achieved_sup, grid, cert.epsilon, cert.dt, cert.guarantee,
                       cert.candidate_index, {**cert.meta, "transported_by": r})


# search --------------------------------------------------------------------

class _Budget(Exception):
    pass


def _sweep(space, rows, cursor: OrbitCursor, thr: float, cfg: SearchConfig, budget: list):
    """Free-space reachability from cell (0, 0) to the last row.

    Returns ``(first_cols, None)`` on success (first reachable column on the path, per row),
    or ``(None, dead_row)`` if no monotone path exists.
    """
    N = len(rows)
    if space.paired(rows[:1], cursor.points[:1])[0] > thr:
        return None, 0
    B = cfg.block_rows
    parts = []
    row_start = np.empty(N, np.int64)
    row_col0 = np.empty(N, np.int64)
    row_width = np.empty(N, np.int64)
    base = 0
    lo = 0
    prev = np.ones(1, dtype=np.bool_)
    rate = 1.0
    i = 0
    while i < N:
        b = min(B, N - i)
        W = len(prev) + int(np.ceil(rate * b)) + 8
        while True:
            avail = cursor.ensure(lo + W - 1)
            c1 = min(lo + W, avail)
            Wc = c1 - lo
            D = space.pairwise(rows[i:i + b], cursor.points[lo:c1])
            free = D <= thr
            pv = np.zeros(Wc, dtype=np.bool_)
            k = min(len(prev), Wc)
            pv[:k] = prev[:k]
            reach, alive, touched = sweep_block(free, pv)
            budget[0] += b * Wc
            if budget[0] > cfg.max_cells:
                raise _Budget()
            if touched and not (cursor.exhausted and c1 >= cursor.count):
                W *= 2
                continue
            break
        if alive < b:
            return None, i + alive
        parts.append(reach.ravel())
        row_start[i:i + b] = base + np.arange(b) * Wc
        row_col0[i:i + b] = lo
        row_width[i:i + b] = Wc
        base += b * Wc
        last = reach[b - 1]
        nz = np.flatnonzero(last)
        old_hi = lo + len(prev) - 1
        new_lo, new_hi = lo + nz[0], lo + nz[-1]
        rate = max(0.5, (new_hi - old_hi) / b + 0.5)
        prev = last[nz[0]: nz[-1] + 1].copy()
        lo = new_lo
        i += b
    flat = np.concatenate(parts)
    first = backtrack(flat, row_start, row_col0, row_width, np.int64(lo))
    if first.size == 0:  # pragma: no cover - would indicate a kernel bug
        raise RuntimeError("inconsistent reachability table")
    return first, None


def _strictify(vals: np.ndarray, room: float) -> np.ndarray:
    """Make a non-decreasing array starting at 0 strictly increasing by tiny shifts within runs."""
    v = np.asarray(vals, dtype=float)
    n = len(v)
    if n < 2:
        return v.copy()
    starts = np.concatenate([[0], np.flatnonzero(np.diff(v) > 0) + 1])
    lengths = np.diff(np.concatenate([starts, [n]]))
    gap = np.append(v[starts[1:]] - v[starts[:-1]], np.inf)
    eta = np.minimum(gap / (2.0 * lengths), room / lengths)
    run = np.repeat(np.arange(len(starts)), lengths)
    q = np.arange(n) - starts[run]
    return v[starts][run] + eta[run] * q


@dataclass
class _Attempt:
    index: int
    status: str  # ok | fail | budget | error
    sup: float = np.inf
    anchors: tuple | None = None
    where: str = ""
    row: int = -1
    cells: int = 0
    message: str = ""


def _try_candidate(system, k, y, fwd_rows, bwd_rows, thr, cfg, dt_fine, ell, t_f, t_b, room):
    budget = [0]
    space = system.space
    try:
        cur_f = OrbitCursor(system, y, 1, dt_fine, t_f, ell)
        first_f, dead = _sweep(space, fwd_rows, cur_f, thr, cfg, budget)
        if first_f is None:
            return _Attempt(k, "fail", where="forward", row=int(dead), cells=budget[0])
        sig_f = cur_f.times[first_f]
        if len(bwd_rows) > 1:
            cur_b = OrbitCursor(system, y, -1, dt_fine, t_b, ell)
            first_b, dead = _sweep(space, bwd_rows, cur_b, thr, cfg, budget)
            if first_b is None:
                return _Attempt(k, "fail", where="backward", row=int(dead), cells=budget[0])
            sig_b = cur_b.times[first_b]
        else:
            sig_b = np.zeros(1)
    except _Budget:
        return _Attempt(k, "budget", cells=budget[0])
    except (HorizonError, IntegrationError) as exc:
        return _Attempt(k, "error", cells=budget[0], message=str(exc))
    hf = _strictify(sig_f, room)
    hb = -_strictify(sig_b, room)
    return _Attempt(k, "ok", anchors=(hb, hf), cells=budget[0])


def _threads(cfg: SearchConfig) -> int:
    if cfg.threads:
        return max(1, int(cfg.threads))
    env = os.environ.get("SHADOWLAB_THREADS")
    return max(1, int(env)) if env else 1


def decide_shadowing(system: FlowSystem, P: PseudoOrbit, eps: float, cfg: SearchConfig | None = None,
                     *, forward_only: bool = False, candidates=None) -> Verdict:
    cfg = cfg or SearchConfig()
    dt = cfg.step(eps)
    spacing = cfg.spacing(eps)
    thr = eps - cfg.guard
    lo = 0 if forward_only else None
    try:
        times, trace, i0 = trace_grid(P, system, dt, lo)
    except (HorizonError, IntegrationError) as exc:
        return Verdict(Outcome.UNKNOWN, None, {"reason": f"trace evaluation failed: {exc}"})
    fwd_rows = trace[i0:]
    bwd_rows = trace[: i0 + 1][::-1]
    span_f = P.partial_sums()[-1]
    span_b = -times[0]
    t_f = min(system.horizon, cfg.time_stretch * span_f + cfg.time_pad)
    t_b = min(system.horizon, cfg.time_stretch * span_b + cfg.time_pad) if span_b > 0 else 0.0
    speed = system.speed_bound
    dt_fine = dt / 2.0 if cfg.thin_orbit else dt
    ell = speed * dt / 2.0 if cfg.thin_orbit else 0.0
    room = 0.5 * cfg.guard / speed if speed > 0 else 1.0
    x0 = P.point(0)
    if candidates is None:
        candidates = system.space.ball_grid(x0, eps, spacing)
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    log = {"candidates": int(len(candidates)), "dt": dt, "grid_spacing": spacing,
           "horizon_forward": float(t_f), "horizon_backward": float(t_b), "trace_rows": int(len(times)),
           "forward_only": bool(forward_only), "search": cfg.to_dict()}

    def run(k):
        return _try_candidate(system, k, candidates[k], fwd_rows, bwd_rows, thr, cfg, dt_fine, ell, t_f, t_b, room)

    n_threads = _threads(cfg)
    attempts: list[_Attempt] = []
    best = None
    if n_threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(n_threads) as ex:
            attempts = list(ex.map(run, range(len(candidates))))
    else:
        for k in range(len(candidates)):
            a = run(k)
            attempts.append(a)
            if a.status == "ok" and not cfg.exhaustive:
                break

    for a in attempts:
        if a.status != "ok":
            continue
        hb, hf = a.anchors
        h_vals = np.concatenate([hb[::-1][:-1], hf])
        y = candidates[a.index]
        try:
            orbit = system.evolve_many(y, h_vals)
        except (HorizonError, IntegrationError) as exc:
            a.status, a.message = "error", str(exc)
            continue
        a.sup = float(np.max(system.space.paired(trace, orbit)))
        a.anchors = h_vals
        if a.sup <= eps and (best is None or a.sup < best.sup):
            best = a
    log["cells"] = int(sum(a.cells for a in attempts))
    log["attempts"] = [{"index": a.index, "status": a.status, "where": a.where, "row": a.row,
                        "sup": (a.sup if np.isfinite(a.sup) else None), "message": a.message} for a in attempts]
    if best is not None:
        h = Reparam(times.copy(), best.anchors.copy())
        cert = Certificate(candidates[best.index].copy(), h, best.sup, times.copy(), float(eps), dt,
                           float(eps + 2.0 * speed * dt), best.index, {"search": cfg.to_dict()})
        ok, sup = check_certificate(system, P, eps, cert, forward_only=forward_only)
        cert.achieved_sup = sup
        if ok:
            return Verdict(Outcome.SHADOWED, cert, log)
        log["reason"] = f"certificate replay gave {sup:.6g} > eps"
        return Verdict(Outcome.UNKNOWN, None, log)
    statuses = {a.status for a in attempts}
    if statuses <= {"fail"}:
        return Verdict(Outcome.NOT_SHADOWED, None, log)
    if "ok" in statuses:
        log["reason"] = "discrete path found but replay exceeded eps"
    elif "budget" in statuses:
        log["reason"] = "resolution budget exhausted"
    else:
        log["reason"] = "flow evaluation failed: " + next(a.message for a in attempts if a.status == "error")
    return Verdict(Outcome.UNKNOWN, None, log)


def decide_forward_shadowing(system: FlowSystem, F: PseudoOrbit, eps: float, cfg: SearchConfig | None = None,
                             **kw) -> Verdict:
    return decide_shadowing(system, F, eps, cfg, forward_only=True, **kw)
