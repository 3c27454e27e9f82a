import numpy as np
import pytest

from shadowlab.models import registry
from shadowlab.shadowing import (FAIL, PASS, EstimateConfig, SearchConfig, check_certificate,
                                 estimate_shadowable_point, estimate_shadowable_set, invariance_check,
                                 neighborhood_stability_check, trial_seed)

QUICK = EstimateConfig(trials=6, n_forward=4, n_backward=4)
SCHED = [0.025, 0.0125, 0.005]


def test_trial_seed_is_deterministic_and_keyed():
    assert trial_seed(1, 0.01, 3) == trial_seed(1, 0.01, 3)
    assert len({trial_seed(1, d, k) for d in (0.01, 0.02) for k in range(5)}) == 10
    assert trial_seed(1, 0.01, 0) != trial_seed(2, 0.01, 0)


def test_rotation_point_passes_with_replayable_certificates():
    rot = registry.build("rotation")
    r = estimate_shadowable_point(rot, [0.2], 0.05, SCHED, QUICK, SearchConfig(exhaustive=False), seed=1)
    assert r.label == PASS and r.delta == SCHED[0]
    assert len(r.certificates) == QUICK.trials == len(r.orbits)
    for key, cert in r.certificates.items():
        assert check_certificate(rot, r.orbits[key], 0.05, cert)[0]


def test_sin2_point_fails_with_witness():
    f = registry.build("sin2")
    cfg = EstimateConfig(trials=6, adversarial_reach=1.0, max_steps=4000)
    r = estimate_shadowable_point(f, [0.4], 0.1, [0.05, 0.01, 1e-3], cfg, SearchConfig(exhaustive=False), seed=2)
    assert r.label == FAIL
    assert r.witness is not None and r.delta == 1e-3
    assert r.witness_verdict.outcome.value == "NOT_SHADOWED_AT_RESOLUTION"


def test_schedule_must_decrease():
    rot = registry.build("rotation")
    with pytest.raises(ValueError):
        estimate_shadowable_point(rot, [0.2], 0.05, [0.01, 0.02], QUICK)


def test_estimates_are_deterministic():
    rot = registry.build("product-rotation")
    a = estimate_shadowable_point(rot, [0.2, 0.4], 0.1, SCHED, QUICK, seed=5)
    b = estimate_shadowable_point(rot, [0.2, 0.4], 0.1, SCHED, QUICK, seed=5)
    assert a.label == b.label and a.delta == b.delta


def test_set_estimate_nesting_on_rotation():
    rot = registry.build("rotation")
    se = estimate_shadowable_set(rot, 4, [0.05, 0.1], lambda e: [e / 2, e / 4], QUICK,
                                 SearchConfig(exhaustive=False), seed=3)
    assert se.nesting_ok
    assert se.pass_fraction(0.05) == 1.0 and se.pass_fraction(0.1) == 1.0


def test_invariance_on_rotation():
    rot = registry.build("rotation")
    out = invariance_check(rot, [0.1], 0.7, 0.05, SCHED, QUICK, SearchConfig(exhaustive=False), seed=4)
    assert out["premise"] and out["holds"]


def test_neighborhood_stability_on_rotation():
    rot = registry.build("rotation")
    out = neighborhood_stability_check(rot, [0.5], 0.02, 0.05, SCHED, QUICK, SearchConfig(exhaustive=False), n=3)
    assert out["premise"] and out["holds"]


def test_two_point_identity_every_point_passes():
    sys = registry.build("two-point-identity")
    for p in sys.space.sample(2, seed=0):
        r = estimate_shadowable_point(sys, p, 0.1, [0.05, 0.01], QUICK)
        assert r.label == PASS
