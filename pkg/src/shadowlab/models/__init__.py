"""Model gallery: closed-form flows, the geometric Lorenz flow and suspension bases."""
from .analytic import (
    IdentityFlow,
    LinearTorusFlow,
    NorthSouthFlow,
    RotationFlow,
    SinSquaredFlow,
    irrational_linear,
    north_south,
    product_rotation,
    rotation,
    sin_squared,
    two_point_identity,
)
from .lorenz import GeometricLorenz, LorenzParams, ReturnMap, StableSetKick, classical_lorenz, geometric_lorenz
from .registry import REGISTRY, ModelEntry, build, entry, listing, names
from .suspended import cantor_interval_identity, cantor_interval_sloped_roof, suspension_flow, two_point_swap

__all__ = [
    "RotationFlow", "SinSquaredFlow", "NorthSouthFlow", "LinearTorusFlow", "IdentityFlow",
    "rotation", "sin_squared", "north_south", "product_rotation", "irrational_linear", "two_point_identity",
    "GeometricLorenz", "LorenzParams", "ReturnMap", "StableSetKick", "geometric_lorenz", "classical_lorenz",
    "cantor_interval_identity", "cantor_interval_sloped_roof", "two_point_swap", "suspension_flow",
    "REGISTRY", "ModelEntry", "build", "entry", "listing", "names",
]
