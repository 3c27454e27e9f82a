"""Shadowing decisions, certificates and shadowable-set estimates."""
from .decide import (
    Certificate,
    Outcome,
    SearchConfig,
    Verdict,
    check_certificate,
    decide_forward_shadowing,
    decide_shadowing,
    trace_step,
    transport_certificate,
)
from .estimate import (
    FAIL,
    PASS,
    UNKNOWN,
    EstimateConfig,
    PointEstimate,
    SetEstimate,
    estimate_shadowable_point,
    estimate_shadowable_set,
    invariance_check,
    neighborhood_stability_check,
    trial_seed,
)

__all__ = [
    "Certificate", "Outcome", "SearchConfig", "Verdict", "check_certificate", "decide_forward_shadowing",
    "decide_shadowing", "trace_step", "transport_certificate", "EstimateConfig", "PointEstimate", "SetEstimate",
    "estimate_shadowable_point", "estimate_shadowable_set", "invariance_check",
    "neighborhood_stability_check", "trial_seed",
    "PASS", "FAIL", "UNKNOWN",
]
