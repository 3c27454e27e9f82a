"""Sampling estimates of the set of shadowable points at a given epsilon."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..core.flow import FlowSystem
from ..errors import GridError
from ..pseudo_orbit import PseudoOrbit, UniformKick, generate_noisy
from .decide import Certificate, Outcome, SearchConfig, Verdict, check_certificate, decide_shadowing, trace_step

__all__ = [
    "EstimateConfig",
    "PointEstimate",
    "SetEstimate",
    "estimate_shadowable_point",
    "estimate_shadowable_set",
    "invariance_check",
    "neighborhood_stability_check",
    "trial_seed",
]

PASS, FAIL, UNKNOWN = "PASS", "FAIL", "UNKNOWN"


@dataclass
class EstimateConfig:
    trials: int = 20
    n_forward: int = 6
    n_backward: int = 6
    t_range: tuple = (1.0, 2.0)
    adversarial_trials: int | None = None
    adversarial_reach: float = 0.0
    adversarial_span: float = 0.0
    max_steps: int = 4000
    forward_only: bool = False
    kicks: list | None = None

    def to_dict(self) -> dict:
        d = {k: v for k, v in self.__dict__.items() if k != "kicks"}
        d["t_range"] = list(self.t_range)
        d["kicks"] = None if self.kicks is None else [getattr(k, "name", "custom") for k in self.kicks]
        return d


@dataclass
class PointEstimate:
    point: np.ndarray
    eps: float
    label: str
    delta: float | None
    witness: PseudoOrbit | None = None
    witness_verdict: Verdict | None = None
    levels: list = field(default_factory=list)
    certificates: dict = field(default_factory=dict)
    orbits: dict = field(default_factory=dict)  # the certified pseudo-orbits, same keys as certificates

    def row(self) -> dict:
        return {"eps": self.eps, "label": self.label, "delta": self.delta,
                "trials": int(sum(l["trials"] for l in self.levels))}


def trial_seed(seed: int, delta: float, trial: int) -> int:
    bits = int(np.float64(delta).view(np.uint64))
    return int(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, bits & 0xFFFFFFFF, bits >> 32, trial]).generate_state(1)[0])


def _plan(system: FlowSystem, delta: float, cfg: EstimateConfig):
    """List of (kick, n_forward, n_backward) for one delta level; adversarial trials first."""
    adv = cfg.kicks if cfg.kicks is not None else system.adversaries()
    n_adv = cfg.adversarial_trials if cfg.adversarial_trials is not None else 2 * len(adv)
    n_adv = min(n_adv, cfg.trials) if adv else 0
    mean_t = 0.5 * (cfg.t_range[0] + cfg.t_range[1])
    steps = cfg.n_forward
    if cfg.adversarial_reach > 0 and delta > 0:
        steps = max(steps, int(np.ceil(cfg.adversarial_reach / delta)))
    if cfg.adversarial_span > 0:
        steps = max(steps, int(np.ceil(cfg.adversarial_span / mean_t)))
    steps = min(steps, cfg.max_steps)
    back_adv = 0 if cfg.forward_only else max(cfg.n_backward, steps)
    back = 0 if cfg.forward_only else cfg.n_backward
    plan = [(adv[k % len(adv)], steps, back_adv) for k in range(n_adv)]
    plan += [(UniformKick(), cfg.n_forward, back)] * (cfg.trials - n_adv)
    return plan


def estimate_shadowable_point(system: FlowSystem, p, eps: float, delta_schedule, cfg: EstimateConfig | None = None,
                              search: SearchConfig | None = None, seed: int = 0, hints: dict | None = None) -> PointEstimate:
    """PASS at the largest delta whose trials are all shadowed, FAIL with a witness, or UNKNOWN.

    The adversarial trials at the smallest delta run first: a pseudo-orbit at that level
    is one at every larger level too, so an unshadowed one there settles FAIL. Otherwise
    levels are visited from the largest delta down and the first trial that is not
    shadowed ends a level. ``hints`` maps ``(delta, trial)`` to certificates found at a
    smaller epsilon; they are replayed before searching.
    """
    cfg = cfg or EstimateConfig()
    search = search or SearchConfig()
    sched = [float(d) for d in delta_schedule]
    if not sched or any(b >= a for a, b in zip(sched, sched[1:])) or sched[-1] <= 0:
        raise ValueError("delta schedule must be positive and strictly decreasing")
    p = np.asarray(p, dtype=float).reshape(system.space.dim)
    est = PointEstimate(p, float(eps), UNKNOWN, None)
    plans = {d: _plan(system, d, cfg) for d in sched}
    memo = {}

    def run(delta, k):
        if (delta, k) in memo:
            return memo[(delta, k)]
        kick, nf, nb = plans[delta][k]
        P = generate_noisy(system, p, delta, n=nf, n_backward=nb, t_range=cfg.t_range,
                           seed=trial_seed(seed, delta, k), kick=kick)
        v = None
        hint = (hints or {}).get((delta, k))
        if hint is not None:
            try:
                ok, _ = check_certificate(system, P, eps, hint, dt_max=trace_step(eps, search.dt),
                                          forward_only=cfg.forward_only)
            except GridError:
                ok = False
            if ok:
                v = Verdict(Outcome.SHADOWED, hint, {"reused": True})
        if v is None:
            v = decide_shadowing(system, P, eps, search, forward_only=cfg.forward_only)
        memo[(delta, k)] = (P, v, getattr(kick, "name", "custom"))
        return memo[(delta, k)]

    def fail(delta, P, v, kick_name, levels):
        P.meta["kick"] = kick_name
        est.label, est.delta, est.witness, est.witness_verdict = FAIL, delta, P, v
        est.levels = levels
        return est

    smallest = sched[-1]
    adv = [k for k, (kick, _, _) in enumerate(plans[smallest]) if getattr(kick, "adversarial", False)]
    for k in adv:
        P, v, name = run(smallest, k)
        if v.outcome is Outcome.NOT_SHADOWED:
            return fail(smallest, P, v, name, [{"delta": smallest, "trials": len(memo), "outcome": FAIL,
                                                "probe": True}])
    last_witness = None
    for delta in sched:
        level = {"delta": delta, "trials": 0, "outcome": PASS}
        certs, orbits = {}, {}
        for k in range(len(plans[delta])):
            P, v, name = run(delta, k)
            level["trials"] += 1
            if v.outcome is Outcome.SHADOWED:
                certs[(delta, k)] = v.certificate
                orbits[(delta, k)] = P
                continue
            if v.outcome is Outcome.NOT_SHADOWED:
                level["outcome"] = FAIL
                last_witness = (delta, P, v, name)
            else:
                level["outcome"] = UNKNOWN
                level["reason"] = v.log.get("reason")
            break
        est.levels.append(level)
        if level["outcome"] == PASS:
            est.label, est.delta, est.certificates, est.orbits = PASS, delta, certs, orbits
            return est
    if last_witness is not None and last_witness[0] == smallest:
        return fail(*last_witness, est.levels)
    est.label, est.delta = UNKNOWN, smallest
    if last_witness is not None:
        est.witness, est.witness_verdict = last_witness[1], last_witness[2]
    return est


@dataclass
class SetEstimate:
    samples: np.ndarray
    eps_schedule: list
    results: dict  # eps -> list[PointEstimate]
    nesting: list

    def labels(self, eps) -> list:
        return [r.label for r in self.results[eps]]

    def pass_fraction(self, eps) -> float:
        lab = self.labels(eps)
        return sum(l == PASS for l in lab) / max(len(lab), 1)

    @property
    def nesting_ok(self) -> bool:
        return all(not n["violations"] for n in self.nesting)


def estimate_shadowable_set(system: FlowSystem, samples, eps_schedule, delta_schedule,
                            cfg: EstimateConfig | None = None, search: SearchConfig | None = None,
                            seed: int = 0) -> SetEstimate:
    """Per-epsilon membership labels on a sample plus the nesting report across epsilons.

    ``samples`` is a point array or a count. ``delta_schedule`` is a list shared by all
    epsilons or a callable ``eps -> list``. Certificates from a smaller epsilon are replayed
    at the larger one before searching, so a pass is never lost when epsilon grows.
    """
    if np.isscalar(samples):
        samples = system.space.sample(int(samples), seed=seed)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    eps_schedule = sorted(float(e) for e in eps_schedule)
    results = {}
    prev_certs = [dict() for _ in range(len(samples))]
    for eps in eps_schedule:
        sched = delta_schedule(eps) if callable(delta_schedule) else delta_schedule
        row = []
        for j, p in enumerate(samples):
            r = estimate_shadowable_point(system, p, eps, sched, cfg, search, seed=seed + j, hints=prev_certs[j])
            prev_certs[j] = {**prev_certs[j], **r.certificates}
            row.append(r)
        results[eps] = row
    nesting = []
    for e1, e2 in zip(eps_schedule, eps_schedule[1:]):
        viol = [j for j in range(len(samples)) if results[e1][j].label == PASS and results[e2][j].label != PASS]
        nesting.append({"eps_small": e1, "eps_large": e2, "violations": viol})
    return SetEstimate(samples, eps_schedule, results, nesting)


def invariance_check(system: FlowSystem, p, s: float, eps: float, delta_schedule, cfg: EstimateConfig | None = None,
                     search: SearchConfig | None = None, seed: int = 0) -> dict:
    """If ``p`` passes at ``(eps, delta)``, test ``phi_s(p)`` at the transported tolerances.

    The image tolerance is the continuity modulus of ``phi_s`` applied to ``eps``; the
    image noise level is the largest ``delta'`` whose ``phi_{-s}`` image stays within ``delta``.
    """
    r = estimate_shadowable_point(system, p, eps, delta_schedule, cfg, search, seed=seed)
    out = {"premise": r.label == PASS, "label": r.label, "delta": r.delta, "s": float(s)}
    if r.label != PASS:
        out["holds"] = True
        return out
    q = system.evolve(p, s)
    eps2 = system.modulus(eps, abs(s)) * (1 + 1e-6)
    delta2 = system.inverse_modulus(r.delta, abs(s))
    r2 = estimate_shadowable_point(system, q, eps2, [delta2], cfg, search, seed=seed + 7919)
    out.update(image=np.asarray(q).tolist(), eps_image=eps2, delta_image=delta2, image_label=r2.label,
               holds=r2.label == PASS)
    return out


def neighborhood_stability_check(system: FlowSystem, center, radius: float, eps: float, delta_schedule,
                                 cfg: EstimateConfig | None = None, search: SearchConfig | None = None,
                                 n: int = 8, seed: int = 0) -> dict:
    """If samples of ``B[center, radius]`` all pass at ``eps`` with some ``delta``, samples of the
    ``delta``-fattened ball must pass at ``2 eps``.
    """
    rng = np.random.default_rng(seed)
    center = np.asarray(center, dtype=float).reshape(system.space.dim)
    inner = np.array([center] + [system.space.perturb(center, radius, rng) for _ in range(n - 1)])
    res = [estimate_shadowable_point(system, p, eps, delta_schedule, cfg, search, seed=seed + j)
           for j, p in enumerate(inner)]
    out = {"center": center.tolist(), "radius": float(radius), "eps": float(eps),
           "premise": all(r.label == PASS for r in res)}
    if not out["premise"]:
        out["holds"] = True
        return out
    delta = min(r.delta for r in res)
    outer = [system.space.perturb(center, radius + delta, rng) for _ in range(n)]
    res2 = [estimate_shadowable_point(system, p, 2 * eps, [delta], cfg, search, seed=seed + 1000 + j)
            for j, p in enumerate(outer)]
    out.update(delta=float(delta), outer_labels=[r.label for r in res2],
               holds=all(r.label == PASS for r in res2))
    return out
