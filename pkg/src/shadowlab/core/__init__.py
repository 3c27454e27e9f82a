from .flow import FlowSystem, check_flow_axioms, check_metric_axioms, evaluate_flow, group_defect
from .reparam import Reparam
from .spaces import (
    CantorIntervalSpace,
    ChartSpace,
    Circle,
    EuclideanBox,
    FiniteSpace,
    FlatTorus,
    LineSubsetSpace,
    MetricSpace,
    cantor_endpoints,
)

__all__ = [
    "FlowSystem",
    "Reparam",
    "MetricSpace",
    "ChartSpace",
    "Circle",
    "FlatTorus",
    "EuclideanBox",
    "LineSubsetSpace",
    "FiniteSpace",
    "CantorIntervalSpace",
    "cantor_endpoints",
    "evaluate_flow",
    "group_defect",
    "check_flow_axioms",
    "check_metric_axioms",
]
