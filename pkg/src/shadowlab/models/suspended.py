"""Base homeomorphisms and their suspension flows."""
from __future__ import annotations

import numpy as np

from ..core.spaces import CantorIntervalSpace, FiniteSpace
from ..suspension import BaseSystem, SuspensionFlow


def _identity(x):
    return np.array(x, dtype=float)


def cantor_interval_identity(level: int = 6) -> BaseSystem:
    """Identity on the level-``level`` Cantor endpoints together with [1, 2]."""
    return BaseSystem(f"cantor-interval-identity-{level}", CantorIntervalSpace(level), _identity, _identity,
                      identity=True)


def cantor_interval_sloped_roof(level: int = 6) -> BaseSystem:
    """Identity base as above with roof ``1 + x / 2``, which ranges over [1, 2]."""
    return BaseSystem(f"cantor-interval-sloped-roof-{level}", CantorIntervalSpace(level), _identity, _identity,
                      roof=lambda x: 1.0 + 0.5 * x[:, 0], roof_bounds=(1.0, 2.0), identity=True)


def two_point_swap() -> BaseSystem:
    def swap(x):
        return 1.0 - np.asarray(x, dtype=float)

    return BaseSystem("two-point-swap", FiniteSpace([0.0, 1.0]), swap, swap, period=2)


def suspension_flow(base: BaseSystem) -> SuspensionFlow:
    if base.constant_roof:
        # identity and swap bases are isometries, so the flow preserves distances
        lip = 1.0
    else:
        # for an identity base the unit-roof speeds 1/roof differ by at most
        # |roof(x) - roof(y)| / min_roof^2 <= d(x, y) for the sloped roof
        lip = lambda t: 1.0 + abs(t)  # noqa: E731
    return SuspensionFlow(base, name=f"suspension-{base.name}", lipschitz=lip)
