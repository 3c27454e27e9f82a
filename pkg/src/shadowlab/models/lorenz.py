"""A geometric Lorenz flow: an exactly linear saddle glued to the Lorenz field.

Coordinates are the classical Lorenz coordinates divided by ``scale`` so that the
region around the attractor has diameter below 1, and time is multiplied by
``time_scale``. Inside the ball of radius ``r_linear`` (classical units) around the
origin the field is the linear part of the Lorenz field; beyond ``r_full`` it is the
full field; in between the quadratic terms are switched on by a smooth step.

The flow is evaluated forward in time only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numba import njit
from scipy.integrate import solve_ivp

from ..core.flow import FlowSystem
from ..core.spaces import EuclideanBox
from ..errors import IntegrationError, ModelError
from ..pseudo_orbit import KICK_MARGIN

__all__ = ["LorenzParams", "GeometricLorenz", "geometric_lorenz", "classical_lorenz", "StableSetKick", "ReturnMap"]


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    scale: float = 100.0
    time_scale: float = 0.8
    r_linear: float = 3.0
    r_full: float = 6.0
    rtol: float = 1e-10
    atol: float = 1e-12
    section_z: float = 27.0
    max_steps: int = 10_000_000
    linear_core: bool = True

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@njit(cache=True)
def _field(X, sigma, rho, beta, scale, k, r0, r1):
    x = X[0] * scale
    y = X[1] * scale
    z = X[2] * scale
    r = np.sqrt(x * x + y * y + z * z)
    s = (r - r0) / (r1 - r0)
    if s < 0.0:
        s = 0.0
    elif s > 1.0:
        s = 1.0
    c = s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
    out = np.empty(3)
    out[0] = k * (sigma * (y - x)) / scale
    out[1] = k * (rho * x - y - c * x * z) / scale
    out[2] = k * (-beta * z + c * x * y) / scale
    return out


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@njit(cache=True)
def _integrate(x0, times, args, rtol, atol, max_steps):
    """Adaptive Dormand-Prince 5(4) landing exactly on each of the sorted positive ``times``.

    Returns ``(samples, status)`` with status 0 on success, -1 when the step budget runs
    out, -2 on a non-finite state and -3 when the step size underflows.
    """
    sigma, rho, beta, scale, k, r0, r1 = args
    n = times.shape[0]
    out = np.empty((n, 3))
    x = x0.copy()
    t = 0.0
    K = np.empty((7, 3))
    K[0] = _field(x, sigma, rho, beta, scale, k, r0, r1)
    h = 1e-3
    steps = 0
    xs = np.empty(3)
    for j in range(n):
        target = times[j]
        while t < target:
            clipped = target - t <= h
            ht = target - t if clipped else h
            for s in range(1, 7):
                for d in range(3):
                    acc = 0.0
                    for q in range(s):
                        acc += _A[s, q] * K[q, d]
                    xs[d] = x[d] + ht * acc
                K[s] = _field(xs, sigma, rho, beta, scale, k, r0, r1)
            err = 0.0
            for d in range(3):
                e = 0.0
                for q in range(7):
                    e += _E[q] * K[q, d]
                sc = atol + rtol * max(abs(x[d]), abs(xs[d]))
                err += (ht * e / sc) ** 2
            err = np.sqrt(err / 3.0)
            steps += 1
            if steps > max_steps:
                return out, -1
            if not np.isfinite(err):
                return out, -2
            fac = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            if err <= 1.0:
                t = target if clipped else t + ht
                x[:] = xs
                K[0] = K[6]
                hn = ht * fac
                h = max(h, hn) if clipped else hn
            else:
                h = ht * fac
                if h < 1e-14:
                    return out, -3
        out[j] = x
    return out, 0


def _field_array(X, sigma, rho, beta, scale, k, r0, r1):
    """Vectorized field for an ``(n, 3)`` array of points."""
    x, y, z = (np.asarray(X, float) * scale).T
    r = np.sqrt(x * x + y * y + z * z)
    s = np.clip((r - r0) / (r1 - r0), 0.0, 1.0)
    c = s**3 * (10.0 - 15.0 * s + 6.0 * s * s)
    return (k / scale) * np.column_stack([sigma * (y - x), rho * x - y - c * x * z, -beta * z + c * x * y])


class StableSetKick:
    """Push along the unstable eigenvector of the saddle toward (and across) its stable plane.

    The stable plane of the linear region is spanned by the z axis and the strong stable
    direction; the signed unstable coordinate of a point measures its side. Every kick
    moves that coordinate toward zero by the full allowed distance. This is a heuristic
    falsification strategy, recorded as such in reports.
    """

    adversarial = True
    name = "stable-set"

    def __init__(self, model: "GeometricLorenz"):
        A = model.linear_part()[:2, :2]
        w, V = np.linalg.eig(A)
        order = np.argsort(w.real)
        self.e_u = np.r_[V[:, order[1]].real, 0.0]
        self.e_u /= np.linalg.norm(self.e_u)
        e_ss = np.r_[V[:, order[0]].real, 0.0]
        # coordinate of z along e_u in the basis (e_u, e_ss, e_z)
        B = np.column_stack([self.e_u, e_ss / np.linalg.norm(e_ss), [0.0, 0.0, 1.0]])
        self._coord = np.linalg.inv(B)[0]

    def unstable_coordinate(self, z) -> float:
        return float(self._coord @ np.asarray(z, float))

    def __call__(self, system, z, delta, rng, sign=1):
        z = np.asarray(z, float)
        a = self.unstable_coordinate(z)
        r = delta * (1 - KICK_MARGIN)
        direction = -np.sign(a) if a != 0 else 1.0
        return z + direction * r * self.e_u


class GeometricLorenz(FlowSystem):
    kind = "integrated"
    invertible = False

    def __init__(self, params: LorenzParams | None = None, name: str = "geometric-lorenz"):
        p = params or LorenzParams()
        self.p = p
        self._check_structure()
        S = p.scale
        lo = np.array([-23.0, -30.0, -3.0]) / S
        hi = np.array([23.0, 30.0, 53.0]) / S
        super().__init__(name, EuclideanBox(lo, hi, name="lorenz-box"), speed_bound=1.0,
                         group_tolerance=1e-7, horizon=1e4)
        self.params = p.to_dict()
        self._args = _args_of(p)
        self.speed_bound = self._estimate_speed()

    # structure -----------------------------------------------------------
    def linear_part(self) -> np.ndarray:
        p = self.p
        return p.time_scale * np.array([[-p.sigma, p.sigma, 0.0], [p.rho, -1.0, 0.0], [0.0, 0.0, -p.beta]])

    def eigenvalues(self) -> np.ndarray:
        return np.sort(np.linalg.eigvals(self.linear_part()).real)

    def _check_structure(self):
        p = self.p
        if not (0 < p.r_linear < p.r_full):
            raise ModelError("need 0 < r_linear < r_full")
        if p.scale <= 0 or p.time_scale <= 0 or p.sigma <= 0 or p.beta <= 0:
            raise ModelError("scale, time scale, sigma and beta must be positive")
        if p.rho <= 1:
            raise ModelError("rho <= 1 gives no saddle at the origin")
        lam_ss, lam_s, lam_u = np.sort(np.linalg.eigvals(
            np.array([[-p.sigma, p.sigma, 0.0], [p.rho, -1.0, 0.0], [0.0, 0.0, -p.beta]])).real)
        if not (lam_ss < lam_s < 0 < lam_u and lam_u + lam_s > 0):
            raise ModelError("saddle eigenvalues must satisfy ss < s < 0 < u with u + s > 0")

    def singularity(self) -> np.ndarray:
        return np.zeros(3)

    def field(self, X) -> np.ndarray:
        return _field(np.asarray(X, float), *self._args)

    def _estimate_speed(self) -> float:
        sp = np.linalg.norm(_field_array(self.attractor(), *self._args), axis=1)
        return float(1.5 * sp.max())

    # integration ---------------------------------------------------------
    def _run(self, x, times) -> np.ndarray:
        out, status = _integrate(np.asarray(x, float), np.asarray(times, float), self._args,
                                 self.p.rtol, self.p.atol, self.p.max_steps)
        if status != 0:
            raise IntegrationError(f"{self.name}: integration failed with status {status}")
        return out

    def reference_solution(self, x, times) -> np.ndarray:
        """The same trajectory from scipy's DOP853, used to cross-check the built-in integrator."""
        times = np.asarray(times, float)
        return self._solve(x, times.max(), t_eval=times).y.T

    def _rhs(self, t, X):
        return _field(X, *self._args)

    def _solve(self, x, t_end, t_eval=None, events=None, dense=False):
        sol = solve_ivp(self._rhs, (0.0, float(t_end)), np.asarray(x, float), method="DOP853",
                        rtol=self.p.rtol, atol=self.p.atol, t_eval=t_eval, events=events, dense_output=dense)
        if sol.status < 0:
            raise IntegrationError(f"{self.name}: {sol.message}")
        return sol

    def evolve_many(self, x, times):
        times = self._check_times(times)
        x = np.asarray(x, dtype=float).reshape(3)
        out = np.empty((times.size, 3))
        if times.size == 0:
            return out
        order = np.argsort(times, kind="stable")
        ts = times[order]
        zero = ts == 0.0
        out[order[zero]] = x
        if (~zero).any():
            out[order[~zero]] = self._run(x, ts[~zero])
        return out

    def flow(self, points, times):
        points = np.asarray(points, float).reshape(-1, 3)
        times = np.asarray(times, float)
        out = np.empty_like(points)
        for k, (x, t) in enumerate(zip(points, times)):
            out[k] = x if t == 0.0 else self._run(x, np.array([t]))[0]
        return out

    def lipschitz(self, t):
        # empirical expansion bound over the attractor with a 1.5 safety factor
        lam = self.eigenvalues()[-1]
        return float(1.5 * np.exp(lam * abs(t)))

    def adversaries(self):
        return [StableSetKick(self)]

    # attractor and section -----------------------------------------------
    def attractor(self) -> np.ndarray:
        return _long_run(self.p)[0]

    def sample_attractor(self, n: int, seed: int = 0) -> np.ndarray:
        pts = self.attractor()
        rng = np.random.default_rng(seed)
        return pts[np.sort(rng.choice(len(pts), size=n, replace=False))]

    def section_events(self):
        zc = self.p.section_z / self.p.scale

        def crossing(t, X):
            return X[2] - zc

        crossing.direction = -1
        return crossing

    def count_returns(self, points_by_segment) -> int:
        """Number of downward crossings of the section along sampled trace points."""
        zc = self.p.section_z / self.p.scale
        z = np.asarray(points_by_segment, float)[:, 2]
        return int(np.sum((z[:-1] > zc) & (z[1:] <= zc)))

    def return_map(self) -> "ReturnMap":
        return _return_map(self.p)

    def next_crossing(self, x, t_max: float = 4.0, step: float = 0.005) -> np.ndarray:
        """First downward section crossing strictly after leaving ``x``."""
        t = np.arange(1, int(round(t_max / step)) + 1) * step
        Z = self._run(x, t)
        F = _field_array(Z, *self._args)
        _, Xc = _section_crossings(t[1:], Z[1:], F[1:], self.p.section_z / self.p.scale)
        if not len(Xc):
            raise IntegrationError(f"{self.name}: no return to the section within {t_max}")
        return Xc[0]

    def expansion_slopes(self, n: int = 200, seed: int = 0, h: float = 1e-7) -> np.ndarray:
        """Finite-difference slopes of the return map on sampled section points.

        Each sampled crossing is displaced by ``h`` along the section axis of its wing; the
        slope is the distance between the two next crossings divided by ``h``.
        """
        R = self.return_map()
        _, _, X = _long_run(self.p)
        rng = np.random.default_rng(seed)
        idx = rng.choice(len(X), size=min(n, len(X)), replace=False)
        out = np.empty(len(idx))
        for j, k in enumerate(idx):
            v = np.r_[R.axis * -R.sides[k], 0.0]
            a = self.next_crossing(X[k])
            b = self.next_crossing(X[k] + h * v)
            out[j] = np.linalg.norm(a - b) / h
        return out


def _args_of(p: LorenzParams):
    # a blend window at negative radii switches the quadratic terms on everywhere
    r0, r1 = (p.r_linear, p.r_full) if p.linear_core else (-2.0, -1.0)
    return (p.sigma, p.rho, p.beta, p.scale, p.time_scale, float(r0), float(r1))


def _section_crossings(t, X, F, level):
    """Downward crossings of ``z = level``, located on the cubic Hermite interpolant of each step."""
    z = X[:, 2]
    idx = np.flatnonzero((z[:-1] > level) & (z[1:] <= level))
    h = t[idx + 1] - t[idx]
    x0, x1, f0, f1 = X[idx], X[idx + 1], F[idx] * h[:, None], F[idx + 1] * h[:, None]

    def herm(s):
        s = s[:, None]
        return ((2 * s**3 - 3 * s**2 + 1) * x0 + (s**3 - 2 * s**2 + s) * f0
                + (-2 * s**3 + 3 * s**2) * x1 + (s**3 - s**2) * f1)

    lo, hi = np.zeros(len(idx)), np.ones(len(idx))
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        above = herm(mid)[:, 2] > level
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
    s = 0.5 * (lo + hi)
    return t[idx] + s * h, herm(s)


@lru_cache(maxsize=4)
def _long_run(p: LorenzParams, t_total: float = 2000.0, transient: float = 100.0, step: float = 0.005,
              keep_every: int = 10):
    """One long forward run: sampled attractor points and downward section crossings."""
    args = _args_of(p)
    start = np.array([1.0, 1.0, 20.0]) / p.scale
    t = np.arange(1, int(round(t_total / step)) + 1) * step
    X, status = _integrate(start, t, args, p.rtol, p.atol, p.max_steps)
    if status != 0:
        raise IntegrationError(f"attractor run failed with status {status}")
    keep = t > transient
    t, X = t[keep], X[keep]
    F = _field_array(X, *args)
    tc, Xc = _section_crossings(t, X, F, p.section_z / p.scale)
    return X[::keep_every].copy(), tc, Xc


@dataclass
class ReturnMap:
    """The one-dimensional return map on the section in the unfolded coordinate.

    Section points of the two wings are related by the symmetry ``(x, y) -> (-x, -y)``;
    reflecting one wing onto the other, the principal axis of the crossings orders each
    wing. The coordinate runs over ``[0, 1/2]`` on one wing and ``[1/2, 1]`` on the other,
    with the two wings joined at their inner ends, so ``0`` and ``1`` are the outer ends.
    The map is discontinuous where the stable set of the singularity meets each wing.
    """

    u: np.ndarray  # coordinate at crossing k
    v: np.ndarray  # coordinate at crossing k + 1
    return_times: np.ndarray
    axis: np.ndarray  # section axis of the reflected wings, in (x, y)
    sides: np.ndarray  # wing label of every crossing, -1 or +1

    def endpoint_fit(self, frac: float = 1.0 / 40):
        """Linear fits of the map near ``u = 0`` and ``u = 1``: ``(f0, f1, residual)``."""
        o = np.argsort(self.u)
        a, b = self.u[o], self.v[o]
        k = max(5, int(len(a) * frac))
        out = []
        res = 0.0
        for sl, end in ((slice(0, k), 0.0), (slice(-k, None), 1.0)):
            c = np.polyfit(a[sl], b[sl], 1)
            r = b[sl] - np.polyval(c, a[sl])
            res = max(res, float(np.std(r)))
            out.append(float(np.polyval(c, end)))
        return out[0], out[1], res

    def boundary_condition(self, margin: float = 10.0) -> dict:
        """Check ``f(0) != 0 or f(1) != 1`` with a margin of ``margin`` fit residuals."""
        f0, f1, res = self.endpoint_fit()
        holds = abs(f0) > margin * res or abs(1.0 - f1) > margin * res
        return {"f0": f0, "f1": f1, "residual": res, "margin": margin, "holds": bool(holds)}


@lru_cache(maxsize=4)
def _return_map(p: LorenzParams) -> ReturnMap:
    _, tc, X = _long_run(p)
    X = X[:, :2]
    side = np.sign(X[:, 1] - 1.5 * X[:, 0])
    folded = X * (-side)[:, None]
    c0 = folded.mean(axis=0)
    _, _, Vt = np.linalg.svd(folded - c0)
    d = Vt[0] * np.sign(Vt[0, 0])
    q = (folded - c0) @ d
    qn = (q - q.min()) / (q.max() - q.min())
    u = np.where(side < 0, 0.5 + 0.5 * qn, 0.5 - 0.5 * qn)
    return ReturnMap(u[:-1], u[1:], np.diff(tc), d, side)


def geometric_lorenz(**params) -> GeometricLorenz:
    return GeometricLorenz(LorenzParams(**params))


def classical_lorenz(**params) -> GeometricLorenz:
    """The plain Lorenz equations in the same scaled coordinates, for exploration only."""
    return GeometricLorenz(LorenzParams(**{**params, "linear_core": False}), name="classical-lorenz")


def trace_returns(model: GeometricLorenz, P, dt: float = 0.01) -> int:
    """Number of downward section crossings along the star trace of a forward pseudo-orbit."""
    from ..pseudo_orbit import trace_grid

    _, trace, _ = trace_grid(P, model, dt, 0)
    return model.count_returns(trace)


def falsify(model: GeometricLorenz, points, eps: float = 0.05, delta: float = 1e-3, returns: int = 30,
            grid_factor: float = 0.2, seed: int = 0, t_range=(1.0, 2.0), controls: bool = True,
            search=None) -> dict:
    """Adversarial forward pseudo-orbits through each point, decided at a fixed resolution.

    The precondition on the return map is asserted first. Every pseudo-orbit is extended
    until its trace crosses the section ``returns`` times. With ``controls`` the exact orbit
    and a uniformly kicked pseudo-orbit through each point are decided as well; their
    verdicts show how much of the outcome the grid resolution alone explains.
    """
    from ..pseudo_orbit import UniformKick, generate_noisy
    from ..shadowing import SearchConfig, decide_forward_shadowing
    from ..shadowing.estimate import trial_seed

    cond = model.return_map().boundary_condition()
    if not cond["holds"]:
        raise ModelError(f"return map boundary values do not satisfy f(0) != 0 or f(1) != 1: {cond}")
    search = search or SearchConfig(grid_spacing=grid_factor * eps, exhaustive=False)
    mean_t = 0.5 * (t_range[0] + t_range[1])
    n0 = int(np.ceil(returns * float(np.mean(model.return_map().return_times)) / mean_t)) + 1
    kick = model.adversaries()[0]
    rows, witnesses, control_rows = [], [], []

    def through(p, d, k, s):
        n = n0
        while True:
            P = generate_noisy(model, p, d, n=n, t_range=t_range, seed=s, kick=k)
            r = trace_returns(model, P)
            if r >= returns:
                return P, r
            n += 1

    for j, p in enumerate(np.atleast_2d(points)):
        s = trial_seed(seed, delta, j)
        P, r = through(p, delta, kick, s)
        P.meta["kick"] = kick.name
        v = decide_forward_shadowing(model, P, eps, search)
        rows.append({"index": j, "point": p, "steps": P.n, "returns": r, "horizon": float(P.partial_sums()[-1]),
                     "outcome": v.outcome.value, **{k: v.log.get(k) for k in ("candidates", "dt", "grid_spacing")}})
        witnesses.append((P, v))
        if controls:
            P0, _ = through(p, 0.0, kick, s)
            P1, _ = through(p, delta, UniformKick(), s)
            control_rows.append({"index": j, "exact": decide_forward_shadowing(model, P0, eps, search).outcome.value,
                                 "uniform": decide_forward_shadowing(model, P1, eps, search).outcome.value})
    return {"precondition": cond, "rows": rows, "witnesses": witnesses, "controls": control_rows,
            "all_not_shadowed": all(r["outcome"] == "NOT_SHADOWED_AT_RESOLUTION" for r in rows),
            "claim": "falsification at resolution: no candidate on the stated grid shadows the pseudo-orbit "
                     "at the stated time step and horizon; this is not a proof of non-shadowability",
            "strategy": "stable-set kick (heuristic)"}
