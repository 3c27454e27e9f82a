"""Name-indexed gallery of models with parameter defaults and the claim each one instantiates."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable

from ..core.flow import FlowSystem, check_flow_axioms, check_metric_axioms
from ..errors import ModelError
from ..suspension import BaseSystem
from . import analytic, lorenz, suspended

__all__ = ["ModelEntry", "REGISTRY", "names", "entry", "build", "listing"]


@dataclass(frozen=True)
class ModelEntry:
    name: str
    constructor: Callable
    family: str  # "flow" or "base"
    space: str
    kind: str
    claim: str
    defaults: dict = field(default_factory=dict)
    axiom_times: float = 4.0

    def row(self) -> dict:
        return {"name": self.name, "space": self.space, "kind": self.kind, "family": self.family,
                "claim": self.claim, "parameters": dict(self.defaults)}


def _suspension_of(base_ctor):
    def make(**params):
        return suspended.suspension_flow(base_ctor(**params))

    return make


_ENTRIES = [
    ModelEntry("rotation", analytic.rotation, "flow", "circle", "analytic",
               "unit-speed rotation of the circle has the pseudo-orbit tracing property"),
    ModelEntry("sin2", analytic.sin_squared, "flow", "circle", "analytic",
               "chain transitive but not transitive, so no point is shadowable"),
    ModelEntry("north-south", analytic.north_south, "flow", "circle", "analytic",
               "contrast system with two hyperbolic fixed points; not chain transitive"),
    ModelEntry("product-rotation", analytic.product_rotation, "flow", "torus", "analytic",
               "isometric and not minimal, so it lacks the pseudo-orbit tracing property"),
    ModelEntry("irrational-linear", analytic.irrational_linear, "flow", "torus", "analytic",
               "contrast system that is minimal, transitive and chain transitive",
               {"alpha": 0.6180339887498949}),
    ModelEntry("two-point-identity", analytic.two_point_identity, "flow", "two points", "analytic",
               "jumps smaller than the gap are null, so every point is shadowable"),
    ModelEntry("geometric-lorenz", lorenz.geometric_lorenz, "flow", "box in R^3", "integrated",
               "geometric Lorenz flow with f(0) != 0 or f(1) != 1 has no forward shadowable points",
               lorenz.LorenzParams().to_dict(), 2.0),
    ModelEntry("classical-lorenz", lorenz.classical_lorenz, "flow", "box in R^3", "integrated",
               "exploration only; carries no acceptance weight",
               {k: v for k, v in lorenz.LorenzParams().to_dict().items() if k != "linear_core"}, 2.0),
    ModelEntry("cantor-interval-identity", suspended.cantor_interval_identity, "base",
               "level-n Cantor endpoints with [1, 2]", "homeomorphism",
               "the shadowable set of the identity is the Cantor set minus the point 1", {"level": 6}),
    ModelEntry("cantor-interval-sloped-roof", suspended.cantor_interval_sloped_roof, "base",
               "level-n Cantor endpoints with [1, 2]", "homeomorphism",
               "identity base with a non-constant roof, for the unit-roof conjugacy", {"level": 6}),
    ModelEntry("two-point-swap", suspended.two_point_swap, "base", "two points", "homeomorphism",
               "period-two base whose suspension is a single closed orbit"),
    ModelEntry("suspension-cantor-interval-identity", _suspension_of(suspended.cantor_interval_identity), "flow",
               "suspension of level-n Cantor endpoints with [1, 2]", "suspension",
               "shadowable points of the suspension are the fibers over shadowable base points",
               {"level": 6}),
    ModelEntry("suspension-cantor-interval-sloped-roof", _suspension_of(suspended.cantor_interval_sloped_roof),
               "flow", "suspension of level-n Cantor endpoints with [1, 2]", "suspension",
               "same correspondence under a non-constant roof", {"level": 6}),
    ModelEntry("suspension-two-point-swap", _suspension_of(suspended.two_point_swap), "flow",
               "suspension of two points", "suspension", "a single periodic orbit of period 2"),
]

REGISTRY = MappingProxyType({e.name: e for e in _ENTRIES})
_BUILT: dict = {}


def names() -> list:
    return sorted(REGISTRY)


def entry(name: str) -> ModelEntry:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ModelError(f"unknown model {name!r}; known: {', '.join(names())}") from None


def _check(e: ModelEntry, obj) -> dict:
    if e.family == "base":
        report = {"metric": check_metric_axioms(obj.space), "base": obj.check()}
        ok = report["metric"]["ok"] and report["base"]["ok"]
    else:
        assert isinstance(obj, FlowSystem)
        report = {"metric": check_metric_axioms(obj.space),
                  "flow": check_flow_axioms(obj, n=100, t_max=e.axiom_times)}
        ok = report["metric"]["ok"] and report["flow"]["ok"]
    if not ok:
        raise ModelError(f"model {e.name} failed its axiom checks: {report}")
    return report


def build(name: str, **params):
    """Construct a model by name; the first construction of each parameter set runs the axiom suites."""
    e = entry(name)
    unknown = set(params) - set(e.defaults)
    if unknown:
        raise ModelError(f"model {name} does not take parameters {sorted(unknown)}")
    key = (name, json.dumps(params, sort_keys=True))
    if key in _BUILT:
        return _BUILT[key][0]
    try:
        obj = e.constructor(**params)
    except TypeError as exc:
        raise ModelError(f"bad parameters for {name}: {exc}") from None
    _BUILT[key] = (obj, _check(e, obj))
    return obj


def axiom_report(name: str, **params) -> dict:
    build(name, **params)
    return _BUILT[(name, json.dumps(params, sort_keys=True))][1]


def listing() -> list:
    return [REGISTRY[n].row() for n in names()]
