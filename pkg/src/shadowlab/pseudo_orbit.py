"""Pseudo-orbits of flows: generation, validation, star traces and constructions.

A pseudo-orbit stores entries ``(x_i, t_i)`` for indices ``index_low .. index_high``.
Index 0 is always present and sits at trace time 0.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core.flow import FlowSystem
from .errors import ConstructionError, HorizonError

__all__ = [
    "PseudoOrbit",
    "UniformKick",
    "DriftKick",
    "KICK_MARGIN",
    "ValidationReport",
    "generate_noisy",
    "exact_orbit",
    "validate",
    "star",
    "star_many",
    "trace_grid",
    "refine_to_bounded_steps",
    "coarsen_steps",
    "splice_through_point",
    "prepend_chain",
    "periodic_extension",
    "write_csv",
    "read_csv",
]

# kicks stay strictly inside the delta-ball
KICK_MARGIN = 1e-9

KINDS = ("bi", "forward", "chain")


@dataclass
class PseudoOrbit:
    points: np.ndarray
    durations: np.ndarray
    index_low: int = 0
    kind: str = "bi"
    policy: str = "truncate"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        self.durations = np.asarray(self.durations, dtype=float).reshape(-1)
        if len(self.points) != len(self.durations):
            raise ValueError("points and durations differ in length")
        if self.index_low > 0 or self.index_low + len(self.points) <= 0:
            raise ValueError("index 0 must lie in the window")
        if np.any(self.durations <= 0):
            raise ValueError("durations must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.policy not in ("truncate", "extend"):
            raise ValueError(f"unknown policy {self.policy!r}")

    @property
    def n(self) -> int:
        return len(self.durations)

    @property
    def index_high(self) -> int:
        return self.index_low + self.n - 1

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def point(self, i: int) -> np.ndarray:
        return self.points[i - self.index_low]

    def duration(self, i: int) -> float:
        return float(self.durations[i - self.index_low])

    def partial_sums(self) -> np.ndarray:
        """``s_i`` for ``i = index_low .. index_high + 1``; exactly 0 at index 0."""
        k0 = -self.index_low
        pos = np.concatenate([[0.0], np.cumsum(self.durations[k0:])])
        neg = -np.cumsum(self.durations[:k0][::-1])[::-1] if k0 else np.zeros(0)
        return np.concatenate([neg, pos])

    def window(self) -> tuple[float, float]:
        s = self.partial_sums()
        return float(s[0]), float(s[-1])

    def sub(self, lo: int, hi: int) -> "PseudoOrbit":
        """Entries ``lo .. hi`` (inclusive); ``lo <= 0 <= hi``."""
        a = lo - self.index_low
        b = hi - self.index_low + 1
        return PseudoOrbit(self.points[a:b].copy(), self.durations[a:b].copy(), lo,
                           "forward" if lo == 0 and self.kind != "chain" else self.kind, self.policy)

    def copy(self) -> "PseudoOrbit":
        return PseudoOrbit(self.points.copy(), self.durations.copy(), self.index_low, self.kind, self.policy, dict(self.meta))


# kicks ---------------------------------------------------------------------

class UniformKick:
    name = "uniform"
    adversarial = False

    def __call__(self, system, z, delta, rng, sign=1):
        return system.space.perturb(z, delta * (1 - KICK_MARGIN), rng)


class DriftKick:
    """Push by the full allowed distance along a fixed chart direction (reversed when building backward)."""

    adversarial = True

    def __init__(self, direction, name=None):
        v = np.asarray(direction, dtype=float).reshape(-1)
        self.direction = v / np.linalg.norm(v)
        self.name = name or "drift" + "".join(f"{c:+.3g}" for c in self.direction)

    def __call__(self, system, z, delta, rng, sign=1):
        space = system.space
        r = delta * (1 - KICK_MARGIN)
        if r <= 0:
            return np.array(z, dtype=float)
        scale = getattr(space, "scale", 1.0)
        step = sign * self.direction * r / scale
        # the margin absorbs rounding in the distance of a full step
        accept = delta * (1 - KICK_MARGIN / 2)
        for _ in range(60):
            cand = space.displace(z, step)
            if space.dist(z, cand) <= accept:
                return cand
            step = step * 0.5
        return np.array(z, dtype=float)


# generation ----------------------------------------------------------------

def generate_noisy(system: FlowSystem, p, delta: float, *, n: int, n_backward: int = 0,
                   t_range=(1.0, 2.0), seed=0, kick=None, kind=None) -> PseudoOrbit:
    """Random (delta, t_min)-pseudo-orbit through ``p`` with ``n`` forward and ``n_backward`` backward entries."""
    if n < 1:
        raise ValueError("need at least the entry at index 0")
    rng = np.random.default_rng(seed)
    kick = kick or UniformKick()
    lo, hi = t_range
    dim = system.space.dim
    fwd_t = rng.uniform(lo, hi, n)
    bwd_t = rng.uniform(lo, hi, n_backward)
    pts = np.empty((n_backward + n, dim))
    pts[n_backward] = np.asarray(p, dtype=float).reshape(dim)
    for k in range(n - 1):
        i = n_backward + k
        z = system.evolve(pts[i], fwd_t[k])
        pts[i + 1] = kick(system, z, delta, rng, 1) if delta > 0 else z
    for k in range(n_backward):
        i = n_backward - 1 - k
        z = kick(system, pts[i + 1], delta, rng, -1) if delta > 0 else pts[i + 1]
        pts[i] = system.evolve(z, -bwd_t[k])
    durations = np.concatenate([bwd_t[::-1], fwd_t])
    if kind is None:
        kind = "bi" if n_backward else "forward"
    P = PseudoOrbit(pts, durations, -n_backward, kind)
    P.meta.update(delta=float(delta), kick=getattr(kick, "name", "custom"), t_range=[float(lo), float(hi)])
    return P


def exact_orbit(system: FlowSystem, p, durations, n_backward: int = 0) -> PseudoOrbit:
    """Orbit of ``p`` chopped at the given durations (the first ``n_backward`` lie before index 0)."""
    durations = np.asarray(durations, dtype=float)
    dim = system.space.dim
    pts = np.empty((len(durations), dim))
    pts[n_backward] = np.asarray(p, dtype=float).reshape(dim)
    for i in range(n_backward, len(durations) - 1):
        pts[i + 1] = system.evolve(pts[i], durations[i])
    for i in range(n_backward - 1, -1, -1):
        pts[i] = system.evolve(pts[i + 1], -durations[i])
    return PseudoOrbit(pts, durations, -n_backward, "bi" if n_backward else "forward")


# validation ----------------------------------------------------------------

@dataclass
class ValidationReport:
    ok: bool
    jumps: np.ndarray
    max_jump: float
    jump_violations: list
    duration_violations: list

    def to_dict(self):
        return {"ok": self.ok, "max_jump": self.max_jump, "jump_violations": self.jump_violations,
                "duration_violations": self.duration_violations}


def jumps(P: PseudoOrbit, system: FlowSystem) -> np.ndarray:
    """``d(phi_{t_i}(x_i), x_{i+1})`` for ``i = index_low .. index_high - 1``."""
    if P.n < 2:
        return np.zeros(0)
    img = system.evolve_pointwise(P.points[:-1], P.durations[:-1])
    return system.space.paired(img, P.points[1:])


def validate(P: PseudoOrbit, system: FlowSystem, delta: float, T: float, T2: float | None = None,
             atol: float | None = None) -> ValidationReport:
    """Check ``t_i >= T`` (and ``<= T2``) and jumps ``<= delta`` up to the flow's evaluation tolerance."""
    atol = system.group_tolerance if atol is None else atol
    J = jumps(P, system)
    ttol = 1e-12 * max(1.0, T)
    dv = [int(P.index_low + k) for k in np.nonzero(P.durations < T - ttol)[0]]
    if T2 is not None:
        dv += [int(P.index_low + k) for k in np.nonzero(P.durations > T2 + 1e-12 * max(1.0, T2))[0]]
    jv = [int(P.index_low + k) for k in np.nonzero(J > delta + atol)[0]]
    return ValidationReport(not dv and not jv, J, float(J.max()) if J.size else 0.0, jv, sorted(set(dv)))


# star traces ---------------------------------------------------------------

def _segment_of(P: PseudoOrbit, s: np.ndarray, t):
    t = np.asarray(t, dtype=float)
    k = np.searchsorted(s, t, side="right") - 1
    below = k < 0
    above = k >= P.n
    if P.policy == "truncate" and (np.any(below) or np.any(above)):
        raise HorizonError(f"trace time outside the window [{s[0]:.6g}, {s[-1]:.6g})")
    return np.clip(k, 0, P.n - 1)


def star(P: PseudoOrbit, system: FlowSystem, t: float):
    """``x_0 * t = phi_{t - s_i}(x_i)`` where ``s_i <= t < s_{i+1}``."""
    s = P.partial_sums()
    k = int(_segment_of(P, s, t))
    return system.evolve(P.points[k], float(t) - s[k])


def star_many(P: PseudoOrbit, system: FlowSystem, times):
    s = P.partial_sums()
    times = np.asarray(times, dtype=float)
    k = _segment_of(P, s, times)
    if system.kind != "integrated":
        return system.evolve_pointwise(P.points[k], times - s[k])
    out = np.empty((len(times), P.dim))
    for seg in np.unique(k):
        m = k == seg
        out[m] = system.evolve_many(P.points[seg], times[m] - s[seg])
    return out


def trace_grid(P: PseudoOrbit, system: FlowSystem, dt: float, lo: int | None = None):
    """Sample the star trace with step at most ``dt``, hitting every ``s_i``.

    Returns ``(times, points, i0)`` where ``times[i0] == 0``. Entries before ``lo`` are skipped.
    """
    s = P.partial_sums()
    first = 0 if lo is None else max(0, lo - P.index_low)
    ts, ps = [], []
    for k in range(first, P.n):
        m = max(1, int(np.ceil(P.durations[k] / dt - 1e-12)))
        local = np.arange(m) * (P.durations[k] / m)
        ts.append(s[k] + local)
        ps.append(system.evolve_many(P.points[k], local))
    times = np.concatenate(ts)
    i0 = int(np.searchsorted(times, 0.0))
    times[i0] = 0.0
    return times, np.concatenate(ps), i0


# constructions -------------------------------------------------------------

def refine_to_bounded_steps(P: PseudoOrbit, system: FlowSystem, a: float) -> PseudoOrbit:
    """Subdivide every step into steps of length ``a`` plus one remainder in ``[a, 2a)``.

    The trace is unchanged. Requires every duration to be at least ``2a``.
    """
    if a <= 0:
        raise ConstructionError("step must be positive")
    if np.min(P.durations) < 2 * a:
        raise ConstructionError(f"refinement needs durations >= 2a = {2 * a:.6g}, got {np.min(P.durations):.6g}")
    m = np.floor(P.durations / a).astype(np.int64) - 1
    r = P.durations - m * a
    # floating remainders can fall just outside [a, 2a)
    hi = r >= 2 * a
    m[hi] += 1
    r[hi] -= a
    lo = r < a
    m[lo] -= 1
    r[lo] += a
    pts, durs = [], []
    for k in range(P.n):
        offs = a * np.arange(m[k] + 1)
        pts.append(system.evolve_many(P.points[k], offs))
        d = np.full(m[k] + 1, a)
        d[-1] = r[k]
        durs.append(d)
    k0 = -P.index_low
    new_low = -int(np.sum(m[:k0] + 1))
    Q = PseudoOrbit(np.concatenate(pts), np.concatenate(durs), new_low, P.kind, P.policy)
    Q.meta.update(refined_from=P.n, step=a)
    return Q


def coarsen_steps(P: PseudoOrbit, system: FlowSystem, m: int, delta: float):
    """Merge runs of ``m`` consecutive steps; entries ``x_{im}`` with summed durations.

    Returns ``(Q, report)``. Raises if the accumulated jump bound is not below ``delta``.
    """
    if m < 1:
        raise ConstructionError("m must be positive")
    J = jumps(P, system)
    dprime = float(J.max()) if J.size else 0.0
    t_span = float(np.max(P.durations)) * (m - 1)
    bound = dprime * sum(system.lipschitz(t_span * (m - 1 - k) / max(m - 1, 1)) for k in range(m))
    if not bound < delta:
        raise ConstructionError(f"accumulated jump bound {bound:.6g} is not below delta {delta:.6g}")
    i_lo = -((-P.index_low) // m)
    i_hi = (P.index_high - (m - 1)) // m
    if i_lo > 0 or i_hi < 0:
        raise ConstructionError("window too short for the requested m")
    idx = np.arange(i_lo, i_hi + 1)
    pts = np.array([P.point(i * m) for i in idx])
    durs = np.array([sum(P.duration(i * m + j) for j in range(m)) for i in idx])
    Q = PseudoOrbit(pts, durs, int(i_lo), P.kind, P.policy)
    return Q, {"m": m, "input_max_jump": dprime, "jump_bound": bound, "delta": delta}


def splice_through_point(P: PseudoOrbit, system: FlowSystem, p):
    """Replace entry 0 by ``(p, t_0)``; report the two affected jumps and their bounds."""
    Q = P.copy()
    p = np.asarray(p, dtype=float).reshape(P.dim)
    d = system.space.dist(p, P.point(0))
    Q.points[-P.index_low] = p
    old = jumps(P, system)
    new = jumps(Q, system)
    k0 = -P.index_low
    rep = {"displacement": d}
    if P.index_low < 0:
        rep["jump_before"] = float(new[k0 - 1])
        rep["bound_before"] = float(old[k0 - 1] + d)
    if P.index_high > 0:
        t0 = P.duration(0)
        rep["jump_after"] = float(new[k0])
        rep["bound_after"] = float(old[k0] + system.modulus(d, t0))
    return Q, rep


def prepend_chain(chain: PseudoOrbit, F: PseudoOrbit) -> PseudoOrbit:
    """Concatenate a finite chain ``y_0..y_{m-1}`` with a forward pseudo-orbit ``x_0, x_1, ...``.

    ``z_j = y_j`` for ``j < m`` and ``z_j = x_{j-m}`` afterwards.
    """
    if F.index_low != 0:
        raise ConstructionError("the continuation must be a forward pseudo-orbit")
    pts = np.concatenate([chain.points, F.points])
    durs = np.concatenate([chain.durations, F.durations])
    Z = PseudoOrbit(pts, durs, 0, "forward", F.policy)
    Z.meta.update(chain_length=chain.n)
    return Z


def periodic_extension(Q: PseudoOrbit, reps_before: int = 2, reps_after: int = 2) -> PseudoOrbit:
    """Repeat a closed chain ``(x_0..x_{n-1})`` so that ``x_{kn+i} = x_i`` over the given number of periods."""
    if Q.index_low != 0:
        raise ConstructionError("periodic extension expects a chain indexed from 0")
    reps = reps_before + reps_after
    pts = np.tile(Q.points, (reps, 1))
    durs = np.tile(Q.durations, reps)
    return PseudoOrbit(pts, durs, -reps_before * Q.n, "bi", Q.policy)


# csv -----------------------------------------------------------------------

def write_csv(P: PseudoOrbit, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(["index", "duration"] + [f"x{k}" for k in range(P.dim)])
        for k in range(P.n):
            w.writerow([P.index_low + k, f"{P.durations[k]:.17g}"] + [f"{v:.17g}" for v in P.points[k]])


def read_csv(path, kind=None) -> PseudoOrbit:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    body = rows[1:]
    idx = [int(r[0]) for r in body]
    if idx != list(range(idx[0], idx[0] + len(idx))):
        raise ValueError("indices must be consecutive")
    durs = np.array([float(r[1]) for r in body])
    pts = np.array([[float(v) for v in r[2:]] for r in body])
    if kind is None:
        kind = "forward" if idx[0] == 0 else "bi"
    return PseudoOrbit(pts, durs, idx[0], kind)
