"""Independent reference implementations used as test oracles."""
import math

import numpy as np


def _trace(P, system, dt, forward_only):
    s = P.partial_sums()
    first = -P.index_low if forward_only else 0
    times, pts = [], []
    for k in range(first, P.n):
        d = P.durations[k]
        m = max(1, math.ceil(d / dt - 1e-12))
        for j in range(m):
            u = j * (d / m)
            times.append(s[k] + u)
            pts.append(system.evolve(P.points[k], u))
    i0 = int(np.argmin(np.abs(np.array(times))))
    return np.array(times), pts, i0


def _orbit_times(t_max, dt):
    n = max(1, math.ceil(t_max / dt - 1e-9))
    ts = [k * dt for k in range(n + 1)]
    ts[-1] = t_max
    return ts


def _path_exists(rows, y, system, direction, t_max, dt, thr):
    """Depth-first search over free lattice cells, from (0, 0) to the last row."""
    ts = _orbit_times(t_max, dt)
    orbit = {}
    dist = system.space.dist

    def free(i, j):
        if j not in orbit:
            orbit[j] = system.evolve(y, direction * ts[j]) if j else np.asarray(y, float)
        return dist(rows[i], orbit[j]) <= thr

    if not free(0, 0):
        return False
    seen = {(0, 0)}
    stack = [(0, 0)]
    last = len(rows) - 1
    while stack:
        i, j = stack.pop()
        if i == last:
            return True
        for a, b in ((i + 1, j + 1), (i + 1, j), (i, j + 1)):
            if a <= last and b < len(ts) and (a, b) not in seen and free(a, b):
                seen.add((a, b))
                stack.append((a, b))
    return False


def brute_force_shadowing(system, P, eps, candidates, dt, time_stretch, time_pad, guard, forward_only=False):
    """Per-candidate existence of a monotone matching through (0, 0), forward and backward."""
    times, pts, i0 = _trace(P, system, dt, forward_only)
    thr = eps - guard
    fwd = pts[i0:]
    bwd = pts[: i0 + 1][::-1]
    span_f = P.partial_sums()[-1]
    span_b = -times[0]
    t_f = min(system.horizon, time_stretch * span_f + time_pad)
    t_b = min(system.horizon, time_stretch * span_b + time_pad) if span_b > 0 else 0.0
    out = []
    for y in candidates:
        ok = _path_exists(fwd, y, system, 1, t_f, dt, thr)
        if ok and len(bwd) > 1:
            ok = _path_exists(bwd, y, system, -1, t_b, dt, thr)
        out.append(ok)
    return out
