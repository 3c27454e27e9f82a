"""Suspension flows over homeomorphisms with the Bowen-Walters distance.

Points of a suspension are arrays ``(x_1, .., x_d, s)`` with base coordinates ``x``
and height ``0 <= s < roof(x)``; ``(x, roof(x))`` is identified with ``(f(x), 0)``.
Distances are measured in the unit-roof space ``(x, s / roof(x))``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core.flow import FlowSystem
from .core.spaces import MetricSpace
from .pseudo_orbit import DriftKick, UniformKick
from .shadowing.estimate import EstimateConfig, FAIL, PASS, UNKNOWN, estimate_shadowable_point, trial_seed

__all__ = [
    "BaseSystem",
    "SuspensionSpace",
    "SuspensionFlow",
    "bw_unit_pairwise",
    "bw_unit_paired",
    "bw_chain_oracle",
    "unit_time",
    "commuting_square_defect",
    "DiscreteEstimate",
    "generate_discrete",
    "decide_discrete",
    "discrete_shadowable_estimate",
    "suspension_correspondence_check",
    "roof_transport_check",
]


class BaseSystem:
    """A homeomorphism ``f`` of a compact space of diameter at most 1 with a positive roof.

    ``f`` and ``f_inv`` act on ``(n, dim)`` arrays; ``roof`` maps them to ``(n,)``.
    ``identity`` marks ``f = id``, which lets heights be reduced in one step.
    """

    def __init__(self, name: str, space: MetricSpace, f, f_inv, roof=None, roof_bounds=(1.0, 1.0),
                 identity: bool = False, period: int | None = None, lipschitz: float = 1.0):
        if space.diameter > 1 + 1e-12:
            raise ValueError("base space must have diameter at most 1")
        lo, hi = map(float, roof_bounds)
        if not 0 < lo <= hi:
            raise ValueError("roof bounds must satisfy 0 < min <= max")
        self.name = name
        self.space = space
        self._f = f
        self._f_inv = f_inv
        self._roof = roof
        self.roof_bounds = (lo, hi)
        self.identity = bool(identity)
        self.period = period
        self.lipschitz = float(lipschitz)
        self.constant_roof = roof is None

    def f(self, x):
        return np.asarray(self._f(np.asarray(x, float).reshape(-1, self.space.dim)), float)

    def f_inv(self, x):
        return np.asarray(self._f_inv(np.asarray(x, float).reshape(-1, self.space.dim)), float)

    def roof(self, x):
        x = np.asarray(x, float).reshape(-1, self.space.dim)
        if self._roof is None:
            return np.full(len(x), self.roof_bounds[0])
        return np.asarray(self._roof(x), float).reshape(-1)

    def power(self, x, k):
        """``f^k(x)`` elementwise for integer arrays ``k``."""
        x = np.array(x, float).reshape(-1, self.space.dim)
        k = np.broadcast_to(np.asarray(k, dtype=np.int64), (len(x),)).copy()
        if self.identity:
            return x
        if self.period:
            k = np.mod(k, self.period)
        while np.any(k != 0):
            pos = k > 0
            neg = k < 0
            if pos.any():
                x[pos] = self.f(x[pos])
                k[pos] -= 1
            if neg.any():
                x[neg] = self.f_inv(x[neg])
                k[neg] += 1
        return x

    def adversaries(self) -> list:
        out = []
        for k in range(self.space.dim):
            e = np.zeros(self.space.dim)
            e[k] = 1.0
            out += [DriftKick(e, f"base{k}+"), DriftKick(-e, f"base{k}-")]
        return out

    def check(self, n: int = 200, seed: int = 0) -> dict:
        x = self.space.sample(n, seed=seed)
        inv = float(np.max(self.space.paired(self.f(self.f_inv(x)), x)))
        inv2 = float(np.max(self.space.paired(self.f_inv(self.f(x)), x)))
        r = self.roof(x)
        lo, hi = self.roof_bounds
        roof_ok = bool(np.all((r >= lo - 1e-12) & (r <= hi + 1e-12)))
        return {"inverse_defect": max(inv, inv2), "roof_ok": roof_ok,
                "ok": max(inv, inv2) <= 1e-12 and roof_ok and self.space.diameter <= 1 + 1e-12}

    def describe(self) -> dict:
        return {"name": self.name, "space": self.space.describe(), "roof_bounds": list(self.roof_bounds),
                "identity": self.identity}


# Bowen-Walters distance on the unit-roof space ---------------------------------

def _bw_terms(base: BaseSystem, xa, sa, xb, sb, pair: bool):
    d = base.space.paired if pair else base.space.pairwise
    if not pair:
        sa = sa[:, None]
        sb = sb[None, :]
    if base.identity:
        # every crossing costs d(x, y) and the roof paths close each fiber into a unit circle
        g = np.abs(sa - sb)
        return d(xa, xb) + np.minimum(g, 1.0 - g)
    fxa, fxb = base.f(xa), base.f(xb)
    ffxa, ffxb = base.f(fxa), base.f(fxb)
    d_xy = d(xa, xb)
    d_fxfy = d(fxa, fxb)
    d_fxy = d(fxa, xb)
    d_ffxfy = d(ffxa, fxb)
    d_fyx = d(xa, fxb)  # d(fy, x)
    d_ffyfx = d(fxa, ffxb)  # d(f^2 y, f x)

    def H(u, near, far):
        return (1 - u) * near + u * far

    direct = np.abs(sa - sb) + np.minimum(H(sa, d_xy, d_fxfy), H(sb, d_xy, d_fxfy))
    via_a = (1 - sa) + sb + np.minimum(d_fxy, H(sb, d_fxy, d_ffxfy))
    via_b = (1 - sb) + sa + np.minimum(d_fyx, H(sa, d_fyx, d_ffyfx))
    return np.minimum(direct, np.minimum(via_a, via_b))


def bw_unit_pairwise(base: BaseSystem, A, B):
    """Distance matrix between unit-roof suspension points.

    The minimum of three move sequences: stay between the two heights and cross
    horizontally; go up through the roof of the first point's fiber; or up through the
    roof of the second. A horizontal crossing at height ``u`` from ``x`` to ``y``
    costs ``(1-u) d(x, y) + u d(f x, f y)``.
    """
    A = np.asarray(A, float).reshape(-1, base.space.dim + 1)
    B = np.asarray(B, float).reshape(-1, base.space.dim + 1)
    return _bw_terms(base, A[:, :-1], A[:, -1], B[:, :-1], B[:, -1], pair=False)


def bw_unit_paired(base: BaseSystem, A, B):
    A = np.asarray(A, float).reshape(-1, base.space.dim + 1)
    B = np.asarray(B, float).reshape(-1, base.space.dim + 1)
    return _bw_terms(base, A[:, :-1], A[:, -1], B[:, :-1], B[:, -1], pair=True)


def bw_chain_oracle(base: BaseSystem, a, b, n_heights: int = 101) -> float:
    """Shortest chain of vertical and horizontal moves on a height lattice, by Dijkstra.

    Fibers are those over ``x, y, f(x), f(y), f^-1(x), f^-1(y)``; vertical moves cost the
    height change, a horizontal move at height ``u`` costs ``(1-u) d(p, q) + u d(f p, f q)``,
    and ``(z, 1)`` is joined to ``(f z, 0)`` at no cost. Chains may use any number of moves.
    """
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import dijkstra

    a = np.asarray(a, float).reshape(-1)
    b = np.asarray(b, float).reshape(-1)
    xs = np.vstack([a[:-1], b[:-1]])
    fib = np.vstack([xs, base.f(xs), base.f_inv(xs)])
    key = np.round(fib, 12)
    _, keep = np.unique(key, axis=0, return_index=True)
    fib = fib[np.sort(keep)]
    m = len(fib)
    hs = np.unique(np.concatenate([np.linspace(0.0, 1.0, n_heights), [a[-1], b[-1]]]))
    n = len(hs)
    node = lambda i, k: i * n + k
    rows, cols, vals = [], [], []
    for i in range(m):
        for k in range(n - 1):
            rows.append(node(i, k)); cols.append(node(i, k + 1)); vals.append(hs[k + 1] - hs[k])
    d0 = base.space.pairwise(fib, fib)
    d1 = base.space.pairwise(base.f(fib), base.f(fib))
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(n):
                u = hs[k]
                rows.append(node(i, k)); cols.append(node(j, k)); vals.append((1 - u) * d0[i, j] + u * d1[i, j])
    img = base.f(fib)
    for i in range(m):
        hit = np.nonzero(np.all(np.abs(fib - img[i]) <= 1e-12, axis=1))[0]
        for j in hit:
            rows.append(node(i, n - 1)); cols.append(node(j, 0)); vals.append(1e-300)
    g = coo_matrix((vals, (rows, cols)), shape=(m * n, m * n)).tocsr()
    src = node(0, int(np.searchsorted(hs, a[-1])))
    dst_fiber = int(np.nonzero(np.all(np.abs(fib - b[:-1]) <= 1e-12, axis=1))[0][0])
    dst = node(dst_fiber, int(np.searchsorted(hs, b[-1])))
    dist = dijkstra(g, directed=False, indices=src)
    return float(dist[dst])


# spaces and flows --------------------------------------------------------------

class SuspensionSpace(MetricSpace):
    """The quotient space with the Bowen-Walters distance pulled back from the unit roof."""

    def __init__(self, base: BaseSystem, name: str | None = None):
        self.base = base
        self.dim = base.space.dim + 1
        self.name = name or f"suspension({base.name})"
        self.scale = getattr(base.space, "scale", 1.0)
        # a height change costs at most 1/2 around the fiber and a crossing at most 1
        self.diameter = 1.5
        self.periodic = tuple(getattr(base.space, "periodic", (False,) * base.space.dim)) + (False,)

    # coordinates
    def canonical(self, points):
        pts = np.array(points, dtype=float)
        flat = pts.reshape(-1, self.dim)
        x, s = flat[:, :-1], flat[:, -1].copy()
        b = self.base
        if b.identity or b.constant_roof:
            tau = b.roof(x)
            k = np.floor(s / tau)
            s = s - k * tau
            x = b.power(x, k.astype(np.int64))
        else:
            for _ in range(1_000_000):
                tau = b.roof(x)
                up = s >= tau
                down = s < 0
                if not (up.any() or down.any()):
                    break
                if up.any():
                    s[up] -= tau[up]
                    x[up] = b.f(x[up])
                if down.any():
                    x[down] = b.f_inv(x[down])
                    s[down] += b.roof(x[down])
        tau = b.roof(x)
        # rounding can leave s = tau or s slightly negative
        over = s >= tau
        if over.any():
            x[over] = b.f(x[over])
            s[over] = 0.0
        s[s < 0] = 0.0
        out = np.concatenate([x, s[:, None]], axis=1)
        return out.reshape(pts.shape)

    def to_unit(self, points):
        p = np.asarray(points, float).reshape(-1, self.dim)
        u = p[:, -1] / self.base.roof(p[:, :-1])
        return np.concatenate([p[:, :-1], u[:, None]], axis=1)

    def from_unit(self, points):
        p = np.asarray(points, float).reshape(-1, self.dim)
        s = p[:, -1] * self.base.roof(p[:, :-1])
        return np.concatenate([p[:, :-1], s[:, None]], axis=1)

    def pairwise(self, A, B):
        return bw_unit_pairwise(self.base, self.to_unit(A), self.to_unit(B))

    def paired(self, A, B):
        A = np.asarray(A, float).reshape(-1, self.dim)
        B = np.asarray(B, float).reshape(-1, self.dim)
        return bw_unit_paired(self.base, self.to_unit(A), self.to_unit(B))

    def contains(self, points):
        p = np.asarray(points, float).reshape(-1, self.dim)
        tau = self.base.roof(p[:, :-1])
        return self.base.space.contains(p[:, :-1]) & (p[:, -1] >= 0) & (p[:, -1] < tau)

    def sample(self, n, seed=0):
        x = self.base.space.sample(n, seed=seed)
        u = np.random.default_rng(seed + 104729).random(n)
        return self.from_unit(np.concatenate([x, u[:, None]], axis=1))

    def ball_grid(self, center, radius, spacing):
        """Center first, then lattice points within ``radius``: base grids around ``x``,
        ``f(x)`` and ``f^-1(x)`` crossed with heights stepped by ``spacing``."""
        c = self.to_unit(center)[0]
        x, u = c[:-1], c[-1]
        b = self.base
        K = int(np.floor(radius / spacing + 1e-9))
        hs = u + spacing * np.arange(-K, K + 1)
        cands = []
        for zc, shift in ((x, 0.0), (b.f(x)[0], -1.0), (b.f_inv(x)[0], 1.0)):
            grid = b.space.ball_grid(zc, radius, spacing)
            h = hs + shift
            h = h[(h >= 0) & (h < 1)]
            if h.size == 0:
                continue
            zz = np.repeat(grid, len(h), axis=0)
            hh = np.tile(h, len(grid))
            cands.append(np.concatenate([zz, hh[:, None]], axis=1))
        pts = np.concatenate(cands) if cands else np.zeros((0, self.dim))
        d = bw_unit_paired(b, np.broadcast_to(c, pts.shape), pts)
        pts = pts[d <= radius * (1 + 1e-12)]
        key = np.round(pts, 12)
        _, first = np.unique(key, axis=0, return_index=True)
        pts = pts[np.sort(first)]
        same = np.all(np.abs(pts - c) <= 1e-12, axis=1)
        pts = np.concatenate([c[None, :], pts[~same]])
        return self.from_unit(pts)

    def perturb(self, center, radius, rng):
        """Rejection sampling: a base perturbation and a height offset, kept if within ``radius``."""
        c = np.asarray(center, float).reshape(self.dim)
        if radius <= 0:
            return c.copy()
        cu = self.to_unit(c)[0]
        for _ in range(400):
            z = self.base.space.perturb(cu[:-1], radius, rng)
            h = cu[-1] + rng.uniform(-radius, radius)
            q = np.concatenate([np.asarray(z, float).reshape(-1), [h]])
            q = self._unit_canonical(q)
            if bw_unit_paired(self.base, cu[None, :], q[None, :])[0] <= radius:
                return self.from_unit(q)[0]
        return c.copy()

    def _unit_canonical(self, q):
        q = np.array(q, float).reshape(-1, self.dim)
        k = np.floor(q[:, -1])
        q[:, -1] -= k
        q[:, :-1] = self.base.power(q[:, :-1], k.astype(np.int64))
        q[q[:, -1] >= 1, -1] = 0.0
        return q[0] if len(q) == 1 else q

    def displace(self, point, vector):
        p = np.asarray(point, float).reshape(self.dim)
        v = np.asarray(vector, float).reshape(self.dim)
        pu = self.to_unit(p)[0]
        z = self.base.space.displace(pu[:-1], v[:-1])
        q = self._unit_canonical(np.concatenate([np.asarray(z, float).reshape(-1), [pu[-1] + v[-1]]]))
        return self.from_unit(q)[0]

    def describe(self):
        return {"name": self.name, "dim": self.dim, "diameter": self.diameter, "base": self.base.describe()}


class SuspensionFlow(FlowSystem):
    """The upward unit-speed flow ``(x, s) -> (x, s + t)`` on the suspension."""

    kind = "suspension"

    def __init__(self, base: BaseSystem, name: str | None = None, lipschitz=None):
        space = SuspensionSpace(base)
        super().__init__(name or space.name, space, speed_bound=1.0 / base.roof_bounds[0], group_tolerance=1e-12)
        self.base = base
        self._lip = lipschitz
        self.params = {"base": base.name}

    def flow(self, points, times):
        p = np.array(points, dtype=float)
        p[:, -1] = p[:, -1] + np.asarray(times, float)
        return self.space.canonical(p)

    def lipschitz(self, t):
        if self._lip is None:
            return float("inf")
        return float(self._lip(t)) if callable(self._lip) else float(self._lip)

    def adversaries(self):
        out = []
        for k in range(self.base.space.dim):
            e = np.zeros(self.space.dim)
            e[k] = 1.0
            out += [DriftKick(e, f"base{k}+"), DriftKick(-e, f"base{k}-")]
        return out


def unit_time(base: BaseSystem, point, t: float) -> float:
    """Time ``theta`` with ``conj(phi^roof_t(p)) = phi^1_theta(conj(p))``."""
    x = np.asarray(point, float).reshape(1, -1)[:, :-1].copy()
    s = float(np.asarray(point, float).reshape(-1)[-1])
    theta = 0.0
    t = float(t)
    while t > 0:
        tau = float(base.roof(x)[0])
        room = tau - s
        if t < room:
            theta += t / tau
            break
        theta += room / tau
        t -= room
        x, s = base.f(x), 0.0
    while t < 0:
        tau = float(base.roof(x)[0])
        if -t <= s:
            theta += t / tau
            break
        theta -= s / tau
        t += s
        x = base.f_inv(x)
        s = float(base.roof(x)[0])
    return theta


def commuting_square_defect(flow_roof: SuspensionFlow, flow_unit: SuspensionFlow, points, times) -> float:
    """Worst ``d(conj(phi^roof_t p), phi^1_theta(conj p))`` over the samples."""
    sp = flow_roof.space
    worst = 0.0
    for p, t in zip(np.atleast_2d(points), np.asarray(times, float)):
        lhs = sp.to_unit(flow_roof.evolve(p, t))
        theta = unit_time(flow_roof.base, p, t)
        rhs = flow_unit.evolve(sp.to_unit(p)[0], theta)
        worst = max(worst, float(bw_unit_paired(flow_unit.base, lhs, rhs[None, :])[0]))
    return worst


# discrete shadowing ------------------------------------------------------------

@dataclass
class DiscreteEstimate:
    point: np.ndarray
    eps: float
    label: str
    delta: float | None
    witness: np.ndarray | None = None
    witness_index_low: int = 0
    levels: list = field(default_factory=list)


def generate_discrete(base: BaseSystem, p, delta: float, n: int, n_backward: int, seed: int, kick=None):
    """Delta-pseudo-orbit of ``f`` through ``p``; returns ``(points, index_low)``."""
    rng = np.random.default_rng(seed)
    kick = kick or UniformKick()
    dim = base.space.dim
    pts = np.empty((n_backward + n, dim))
    pts[n_backward] = np.asarray(p, float).reshape(dim)
    for k in range(n - 1):
        i = n_backward + k
        z = base.f(pts[i])[0]
        pts[i + 1] = kick(base, z, delta, rng, 1) if delta > 0 else z
    for k in range(n_backward):
        i = n_backward - 1 - k
        z = kick(base, pts[i + 1], delta, rng, -1) if delta > 0 else pts[i + 1]
        pts[i] = base.f_inv(z)[0]
    return pts, -n_backward


def decide_discrete(base: BaseSystem, pts, index_low: int, eps: float, spacing: float | None = None):
    """Search ``q`` on a grid over the closed ``eps``-ball around ``x_0`` with
    ``d(f^i q, x_i) <= eps`` on the window. Returns ``(shadowed, q, sup, n_candidates)``."""
    pts = np.asarray(pts, float)
    x0 = pts[-index_low]
    cands = base.space.ball_grid(x0, eps, spacing or eps / 5)
    n_fwd = len(pts) + index_low
    best = (np.inf, None)
    alive = np.ones(len(cands), dtype=bool)
    worst = np.zeros(len(cands))
    cur = cands.copy()
    for i in range(n_fwd):
        if i:
            cur = base.f(cur)
        d = base.space.paired(cur, np.broadcast_to(pts[i - index_low], cur.shape))
        worst = np.maximum(worst, d)
        alive &= worst <= eps
        if not alive.any():
            return False, None, float(np.min(worst)), len(cands)
    cur = cands.copy()
    for i in range(-1, index_low - 1, -1):
        cur = base.f_inv(cur)
        d = base.space.paired(cur, np.broadcast_to(pts[i - index_low], cur.shape))
        worst = np.maximum(worst, d)
        alive &= worst <= eps
        if not alive.any():
            return False, None, float(np.min(worst)), len(cands)
    k = int(np.argmin(np.where(alive, worst, np.inf)))
    best = (float(worst[k]), cands[k])
    return True, best[1], best[0], len(cands)


def discrete_shadowable_estimate(base: BaseSystem, p, eps: float, delta_schedule, cfg: EstimateConfig | None = None,
                                 seed: int = 0, spacing: float | None = None) -> DiscreteEstimate:
    """Same protocol as the flow estimator, with exact orbit comparison and no time change."""
    cfg = cfg or EstimateConfig()
    sched = [float(d) for d in delta_schedule]
    if not sched or any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] <= 0:
        raise ValueError("delta schedule must be positive and strictly decreasing")
    p = np.asarray(p, float).reshape(base.space.dim)
    adv = cfg.kicks if cfg.kicks is not None else base.adversaries()
    n_adv = cfg.adversarial_trials if cfg.adversarial_trials is not None else 2 * len(adv)
    n_adv = min(n_adv, cfg.trials) if adv else 0
    est = DiscreteEstimate(p, float(eps), UNKNOWN, None)
    memo = {}

    def plan(delta, k):
        steps = cfg.n_forward
        if cfg.adversarial_reach > 0:
            steps = max(steps, int(np.ceil(cfg.adversarial_reach / delta)))
        steps = min(steps, cfg.max_steps)
        if k < n_adv:
            return adv[k % len(adv)], steps, 0 if cfg.forward_only else steps
        return UniformKick(), cfg.n_forward, 0 if cfg.forward_only else cfg.n_backward

    def run(delta, k):
        if (delta, k) not in memo:
            kick, nf, nb = plan(delta, k)
            pts, lo = generate_discrete(base, p, delta, nf, nb, trial_seed(seed, delta, k), kick)
            ok = decide_discrete(base, pts, lo, eps, spacing)[0]
            memo[(delta, k)] = (ok, pts, lo, getattr(kick, "name", "custom"))
        return memo[(delta, k)]

    smallest = sched[-1]
    for k in range(n_adv):
        ok, pts, lo, name = run(smallest, k)
        if not ok:
            est.label, est.delta, est.witness, est.witness_index_low = FAIL, smallest, pts, lo
            est.levels = [{"delta": smallest, "trials": k + 1, "outcome": FAIL, "kick": name, "probe": True}]
            return est
    last = None
    for delta in sched:
        level = {"delta": delta, "trials": 0, "outcome": PASS}
        for k in range(cfg.trials):
            ok, pts, lo, name = run(delta, k)
            level["trials"] += 1
            if not ok:
                level.update(outcome=FAIL, kick=name)
                last = (delta, pts, lo)
                break
        est.levels.append(level)
        if level["outcome"] == PASS:
            est.label, est.delta = PASS, delta
            return est
    est.delta = smallest
    if last is not None and last[0] == smallest:
        est.label = FAIL
        est.witness, est.witness_index_low = last[1], last[2]
    return est


def suspension_correspondence_check(flow: SuspensionFlow, base_points, heights, eps: float, delta_schedule,
                                    cfg: EstimateConfig | None = None, search=None, seed: int = 0,
                                    fiber_heights=None, fiber_count: int = 0) -> dict:
    """Compare suspension verdicts at ``(x, h * roof(x))`` with the base verdict at ``x``.

    ``heights`` are unit-roof heights cycled over the base points. The first
    ``fiber_count`` base points are additionally tested at every height in
    ``fiber_heights`` for fiber invariance.
    """
    base = flow.base
    base_points = np.atleast_2d(np.asarray(base_points, float))
    heights = list(heights)
    labels = [PASS, FAIL, UNKNOWN]
    matrix = {b: {s: 0 for s in labels} for b in labels}
    rows, disagreements = [], []
    base_cache = {}

    def base_label(j):
        if j not in base_cache:
            base_cache[j] = discrete_shadowable_estimate(base, base_points[j], eps, delta_schedule, cfg, seed=seed + j)
        return base_cache[j]

    def susp_label(j, h):
        x = base_points[j]
        z = np.concatenate([x, [h * base.roof(x)[0]]])
        return estimate_shadowable_point(flow, z, eps, delta_schedule, cfg, search, seed=seed + j)

    for j in range(len(base_points)):
        h = heights[j % len(heights)]
        b = base_label(j)
        s = susp_label(j, h)
        matrix[b.label][s.label] += 1
        row = {"index": j, "base": base_points[j].tolist(), "height": h, "base_label": b.label,
               "suspension_label": s.label, "base_delta": b.delta, "suspension_delta": s.delta}
        rows.append(row)
        if b.label != s.label:
            disagreements.append({**row, "suspension_levels": s.levels, "base_levels": b.levels})
    fibers = []
    for j in range(min(fiber_count, len(base_points))):
        labs = [susp_label(j, h).label for h in (fiber_heights or heights)]
        fibers.append({"index": j, "labels": labs, "constant": len(set(labs)) == 1})
    agree = sum(matrix[l][l] for l in labels)
    hard = matrix[PASS][FAIL] + matrix[FAIL][PASS]
    return {"n": len(rows), "agree": agree, "matrix": matrix, "rows": rows, "disagreements": disagreements,
            "pass_fail_conflicts": hard, "fibers": fibers,
            "fiber_invariance": all(f["constant"] for f in fibers)}


def roof_transport_check(flow_roof: SuspensionFlow, flow_unit: SuspensionFlow, points, eps: float, delta_schedule,
                         cfg: EstimateConfig | None = None, search=None, seed: int = 0) -> dict:
    """Verdicts at ``p`` in the roof suspension against verdicts at ``conj(p)`` in the unit one."""
    rows = []
    for j, p in enumerate(np.atleast_2d(points)):
        a = estimate_shadowable_point(flow_roof, p, eps, delta_schedule, cfg, search, seed=seed + j)
        q = flow_roof.space.to_unit(p)[0]
        b = estimate_shadowable_point(flow_unit, q, eps, delta_schedule, cfg, search, seed=seed + j)
        rows.append({"point": p.tolist(), "image": q.tolist(), "label": a.label, "image_label": b.label})
    return {"rows": rows, "agree": sum(r["label"] == r["image_label"] for r in rows), "n": len(rows)}
