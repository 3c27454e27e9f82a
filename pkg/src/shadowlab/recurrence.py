"""Chain recurrence, nonwandering points, transitivity and minimality on box covers.

Chain relations are outer-approximated by a box-to-box transition graph; the
nonwandering set is inner-approximated by witnessed returns. Reports comparing the
two say which side each estimate sits on.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .core.flow import FlowSystem
from .core.spaces import ChartSpace

__all__ = [
    "BoxCover",
    "TransitionGraph",
    "build_transition_graph",
    "chain_related",
    "chain_recurrent_estimate",
    "chain_transitive_check",
    "nonwandering_estimate",
    "transitivity_probe",
    "minimality_probe",
    "omega_in_cr_check",
    "cr_equals_omega_check",
    "transitivity_theorem_check",
]


class BoxCover:
    """Axis-aligned cells of side ``rho`` (in chart units) covering a chart space.

    A point on a shared cell face belongs to the cell with the smallest index.
    With ``occupied`` given, only those flat cell indices are kept as nodes.
    """

    def __init__(self, space: ChartSpace, rho: float, occupied=None):
        if rho <= 0:
            raise ValueError("cell size must be positive")
        if not isinstance(space, ChartSpace):
            raise TypeError("box covers need a chart space")
        self.space = space
        self.rho = float(rho)
        self.lo = space.chart_lo
        extent = space.chart_hi - space.chart_lo
        self.shape = tuple(int(np.ceil(e / self.rho - 1e-9)) for e in extent)
        self.periodic = np.array(space.periodic)
        total = int(np.prod(self.shape))
        flat = np.arange(total) if occupied is None else np.unique(np.asarray(occupied, dtype=np.int64))
        self.flat = flat
        self._node = {int(f): k for k, f in enumerate(flat)}

    @classmethod
    def from_samples(cls, space: ChartSpace, rho: float, points) -> "BoxCover":
        full = cls(space, rho)
        return cls(space, rho, occupied=full.flat_index(points))

    @property
    def n(self) -> int:
        return len(self.flat)

    def multi_index(self, points) -> np.ndarray:
        pts = self.space.canonical(np.asarray(points, dtype=float).reshape(-1, self.space.dim))
        rel = (pts - self.lo) / self.rho
        # ceil - 1 sends a point on a face to the lower cell; the chart origin goes to cell 0
        idx = np.ceil(rel - 1e-12).astype(np.int64) - 1
        return np.clip(idx, 0, np.array(self.shape) - 1)

    def flat_index(self, points) -> np.ndarray:
        return np.ravel_multi_index(self.multi_index(points).T, self.shape)

    def node_of(self, points) -> np.ndarray:
        """Node index of each point, or -1 if its cell is not part of the cover."""
        return np.array([self._node.get(int(f), -1) for f in self.flat_index(points)], dtype=np.int64)

    def cell_lo(self, nodes) -> np.ndarray:
        mi = np.array(np.unravel_index(self.flat[np.asarray(nodes)], self.shape)).T
        return self.lo + mi * self.rho

    def centers(self, nodes=None) -> np.ndarray:
        nodes = np.arange(self.n) if nodes is None else np.asarray(nodes)
        return self.space.canonical(self.cell_lo(nodes) + self.rho / 2)

    def interior_samples(self, k: int, seed: int = 0) -> np.ndarray:
        """``k`` stratified points per cell, shape ``(n, k, dim)``."""
        rng = np.random.default_rng(seed)
        d = self.space.dim
        per_axis = max(1, int(np.ceil(k ** (1.0 / d))))
        strata = np.array(list(itertools.product(range(per_axis), repeat=d)), dtype=float)[:k]
        jitter = rng.random((self.n, len(strata), d))
        frac = (strata[None, :, :] + 0.05 + 0.9 * jitter) / per_axis
        pts = self.cell_lo(np.arange(self.n))[:, None, :] + frac * self.rho
        return self.space.canonical(pts)

    def describe(self) -> dict:
        return {"rho": self.rho, "shape": list(self.shape), "cells": self.n}


@dataclass
class TransitionGraph:
    cover: BoxCover
    T: float
    delta: float
    edges: np.ndarray  # (m, 2) node pairs
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        n = self.cover.n
        e = self.edges
        self.matrix = csr_matrix((np.ones(len(e), dtype=np.int8), (e[:, 0], e[:, 1])), shape=(n, n))
        self.matrix.sum_duplicates()
        self.n_scc, self.scc = connected_components(self.matrix, directed=True, connection="strong")
        self.self_loop = np.zeros(n, dtype=bool)
        self.self_loop[e[e[:, 0] == e[:, 1], 0]] = True

    @property
    def n(self) -> int:
        return self.cover.n

    def successors(self, node: int) -> np.ndarray:
        m = self.matrix
        return m.indices[m.indptr[node]: m.indptr[node + 1]]

    def reachable(self, a: int) -> np.ndarray:
        """Nodes reached from ``a`` by paths of length at least one."""
        seen = np.zeros(self.n, dtype=bool)
        for s in self.successors(a):
            if not seen[s]:
                order = breadth_first_order(self.matrix, int(s), directed=True, return_predecessors=False)
                seen[order] = True
        return seen

    def edge_rows(self):
        return [(int(a), int(b)) for a, b in self.edges]


def _cells_near(cover: BoxCover, y: np.ndarray, delta: float):
    """Flat indices of the cells whose closure lies within ``delta`` of ``y``."""
    space = cover.space
    reach = delta / space.scale
    per_axis = []
    for k in range(space.dim):
        lo = int(np.floor((y[k] - reach - cover.lo[k]) / cover.rho)) - 1
        hi = int(np.floor((y[k] + reach - cover.lo[k]) / cover.rho)) + 1
        ids = np.arange(lo, hi + 1)
        if cover.periodic[k]:
            ids = np.unique(np.mod(ids, cover.shape[k]))
        else:
            ids = ids[(ids >= 0) & (ids < cover.shape[k])]
        cell_lo = cover.lo[k] + ids * cover.rho
        g = np.maximum(0.0, np.maximum(cell_lo - y[k], y[k] - cell_lo - cover.rho))
        if cover.periodic[k]:
            per = space._period[k]
            for shift in (-per, per):
                s_lo = cell_lo + shift
                g = np.minimum(g, np.maximum(0.0, np.maximum(s_lo - y[k], y[k] - s_lo - cover.rho)))
        per_axis.append((ids, g))
    grids = np.meshgrid(*[p[0] for p in per_axis], indexing="ij")
    gaps = np.meshgrid(*[p[1] for p in per_axis], indexing="ij")
    gap = space.scale * np.sqrt(sum(g * g for g in gaps))
    ok = gap <= delta * (1 + 1e-12)
    return np.ravel_multi_index([g[ok] for g in grids], cover.shape)


def build_transition_graph(system: FlowSystem, cover: BoxCover, T: float, delta: float,
                           samples_per_box: int = 4, seed: int = 0) -> TransitionGraph:
    """Edge ``B -> B'`` iff the closed ``delta``-ball around ``phi_T`` of some sample of ``B`` meets ``B'``."""
    if T < 1:
        raise ValueError("transition time must be at least 1")
    pts = cover.interior_samples(samples_per_box, seed=seed)
    n, k, d = pts.shape
    flat_pts = pts.reshape(-1, d)
    imgs = system.evolve_pointwise(flat_pts, np.full(len(flat_pts), float(T)))
    src = np.repeat(np.arange(n), k)
    edges = set()
    for s, y in zip(src, imgs):
        for f in _cells_near(cover, y, delta):
            node = cover._node.get(int(f))
            if node is not None:
                edges.add((int(s), node))
    arr = np.array(sorted(edges), dtype=np.int64).reshape(-1, 2)
    return TransitionGraph(cover, float(T), float(delta), arr,
                           {"samples_per_box": samples_per_box, "seed": seed, "model": system.name})


def chain_related(p, q, G: TransitionGraph) -> bool:
    """Two-way reachability between the cells of ``p`` and ``q`` by nonempty paths."""
    a, b = G.cover.node_of(np.vstack([np.atleast_1d(p), np.atleast_1d(q)]))
    if a < 0 or b < 0:
        raise ValueError("point outside the cover")
    if a == b:
        return bool(G.self_loop[a] or np.sum(G.scc == G.scc[a]) > 1)
    return bool(G.scc[a] == G.scc[b])


def chain_recurrent_estimate(G: TransitionGraph) -> np.ndarray:
    """Nodes in a nontrivial strongly connected component or carrying a self-loop."""
    sizes = np.bincount(G.scc, minlength=G.n_scc)
    return np.nonzero((sizes[G.scc] > 1) | G.self_loop)[0]


def chain_transitive_check(G: TransitionGraph) -> bool:
    if G.n == 0:
        return False
    if G.n == 1:
        return bool(G.self_loop[0])
    return G.n_scc == 1


def _time_step(system: FlowSystem, resolution: float) -> float:
    if system.speed_bound <= 0:
        return 1.0
    return min(0.1, resolution / system.speed_bound)


def nonwandering_estimate(system: FlowSystem, samples, t_max: float, eps_nbhd: float,
                          probes_spacing: float | None = None, t_min: float = 1.0):
    """Witnessed returns: ``p`` is labeled nonwandering if a probe ``u`` in ``B(p, eps_nbhd)``
    has ``phi_t(u)`` in ``B(p, eps_nbhd)`` at a sampled ``t`` in ``[t_min, t_max]``.

    Returns ``(labels, return_times)``; ``return_times`` is NaN where no return was seen.
    This under-approximates the nonwandering set.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    spacing = probes_spacing or eps_nbhd / 3
    dt = _time_step(system, eps_nbhd / 4)
    times = np.arange(t_min, t_max + 0.5 * dt, dt)
    labels = np.zeros(len(samples), dtype=bool)
    when = np.full(len(samples), np.nan)
    for j, p in enumerate(samples):
        probes = system.space.ball_grid(p, eps_nbhd * 0.999, spacing)
        for u in probes:
            orbit = system.evolve_many(u, times)
            dd = system.space.pairwise(p[None, :], orbit)[0]
            hit = np.nonzero(dd < eps_nbhd)[0]
            if hit.size:
                labels[j] = True
                when[j] = times[hit[0]]
                break
    return labels, when


def transitivity_probe(system: FlowSystem, x, horizon: float, eps_dense: float, targets):
    """Does the forward orbit of ``x`` on ``[0, horizon]`` pass within ``eps_dense`` of every target?

    Returns ``(ok, coverage_fraction)``.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    dt = _time_step(system, eps_dense / 2)
    n_steps = int(np.ceil(horizon / dt))
    covered = np.zeros(len(targets), dtype=bool)
    chunk = 20000
    start = np.asarray(x, dtype=float).reshape(system.space.dim)
    done = 0
    while done <= n_steps and not covered.all():
        k = min(chunk, n_steps + 1 - done)
        ts = (done + np.arange(k)) * dt
        ts[ts > horizon] = horizon
        orbit = system.evolve_many(start, ts)
        todo = np.nonzero(~covered)[0]
        dmin = system.space.pairwise(targets[todo], orbit).min(axis=1)
        covered[todo[dmin <= eps_dense]] = True
        done += k
    frac = float(covered.mean()) if len(targets) else 1.0
    return bool(covered.all()), frac


def minimality_probe(system: FlowSystem, samples, horizon: float, eps_dense: float, targets=None):
    """Every sampled start passes :func:`transitivity_probe`. Returns ``(ok, coverages)``."""
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    targets = samples if targets is None else targets
    cov = []
    for x in samples:
        ok, frac = transitivity_probe(system, x, horizon, eps_dense, targets)
        cov.append(frac)
        if not ok:
            return False, cov
    return True, cov


# sample-level theorem checks ---------------------------------------------------

def omega_in_cr_check(G: TransitionGraph, samples, nonwandering) -> dict:
    """Every nonwandering-labeled sample lies in a chain recurrent cell."""
    cr = np.zeros(G.n, dtype=bool)
    cr[chain_recurrent_estimate(G)] = True
    nodes = G.cover.node_of(samples)
    nw = np.asarray(nonwandering, dtype=bool)
    bad = np.nonzero(nw & ((nodes < 0) | ~cr[np.maximum(nodes, 0)]))[0]
    return {"holds": bad.size == 0, "violations": bad.tolist(), "nonwandering": int(nw.sum()),
            "note": "outer estimate of CR against inner estimate of the nonwandering set"}


def cr_equals_omega_check(system: FlowSystem, G: TransitionGraph, shadow_labels, t_max: float,
                          eps_nbhd: float, probes_per_cell: int = 3, seed: int = 0) -> dict:
    """If every chain recurrent sample is shadowable, each chain recurrent cell should hold a
    sample with a witnessed return. ``shadow_labels`` are the estimates on the CR samples."""
    premise = bool(len(shadow_labels)) and all(l == "PASS" for l in shadow_labels)
    cr = chain_recurrent_estimate(G)
    out = {"premise": premise, "cr_cells": int(len(cr))}
    if not premise:
        out["holds"] = True
        return out
    pts = G.cover.interior_samples(probes_per_cell, seed=seed)[cr]
    missing = []
    for node, cell_pts in zip(cr, pts):
        lab, _ = nonwandering_estimate(system, cell_pts, t_max, eps_nbhd)
        if not lab.any():
            missing.append(int(node))
    out.update(holds=not missing, cells_without_return=missing)
    return out


def transitivity_theorem_check(chain_transitive: bool, shadow_labels, transitive: bool) -> dict:
    """Chain transitive with some shadowable sample implies transitive; the contrapositive
    on a chain transitive, non-transitive flow says no sample may pass."""
    any_pass = any(l == "PASS" for l in shadow_labels)
    premise = bool(chain_transitive and any_pass)
    holds = transitive if premise else True
    return {"premise": premise, "chain_transitive": bool(chain_transitive), "any_pass": any_pass,
            "transitive": bool(transitive), "holds": bool(holds),
            "all_fail": all(l == "FAIL" for l in shadow_labels)}
