import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import brute_force_shadowing
from shadowlab.core import Reparam
from shadowlab.errors import GridError
from shadowlab.models import registry
from shadowlab.pseudo_orbit import PseudoOrbit, exact_orbit, generate_noisy, prepend_chain
from shadowlab.shadowing import (Certificate, Outcome, SearchConfig, check_certificate, decide_forward_shadowing,
                                 decide_shadowing, transport_certificate)

COARSE = ["rotation", "sin2", "north-south", "product-rotation"]


def coarse_instance(seed):
    """Small instance: at most 12 entries, at most 20 candidates, trace step 0.25."""
    rng = np.random.default_rng(seed)
    name = COARSE[seed % len(COARSE)]
    sys = registry.build(name)
    eps = float(rng.uniform(0.05, 0.3))
    delta = float(rng.choice([0.0, rng.uniform(0, eps)]))
    n = int(rng.integers(1, 8))
    nb = int(rng.integers(0, 12 - n + 1))
    p = sys.space.sample(1, seed=seed)[0]
    P = generate_noisy(sys, p, delta, n=n, n_backward=nb, t_range=(0.5, 1.5), seed=seed)
    spacing = eps / 4 if sys.space.dim == 1 else eps / 2
    cfg = SearchConfig(dt=0.25, grid_spacing=spacing, time_stretch=1.5, time_pad=0.5, thin_orbit=False,
                       exhaustive=True)
    forward_only = bool(rng.integers(0, 2))
    return sys, P, eps, cfg, forward_only


def compare_with_oracle(seed):
    sys, P, eps, cfg, fwd = coarse_instance(seed)
    cands = sys.space.ball_grid(P.point(0), eps, cfg.grid_spacing)
    assert len(cands) <= 20
    v = decide_shadowing(sys, P, eps, cfg, forward_only=fwd)
    ref = brute_force_shadowing(sys, P, eps, cands, 0.25, cfg.time_stretch, cfg.time_pad, cfg.guard, fwd)
    got = [a["status"] == "ok" for a in sorted(v.log["attempts"], key=lambda a: a["index"])]
    expected = Outcome.SHADOWED if any(ref) else Outcome.NOT_SHADOWED
    return v.outcome == expected and got == ref, (v.outcome, expected, got, ref)


@pytest.mark.parametrize("seed", range(24))
def test_agrees_with_brute_force(seed):
    ok, detail = compare_with_oracle(seed)
    assert ok, detail


@pytest.mark.parametrize("name", COARSE)
@given(seed=st.integers(0, 10**6), eps=st.floats(0.03, 0.3), frac=st.floats(0, 1))
def test_every_shadowed_verdict_replays(name, seed, eps, frac):
    sys = registry.build(name)
    p = sys.space.sample(1, seed=seed)[0]
    P = generate_noisy(sys, p, frac * eps / 2, n=4, n_backward=2, seed=seed)
    v = decide_shadowing(sys, P, eps, SearchConfig(exhaustive=False))
    if v.outcome is Outcome.SHADOWED:
        ok, sup = check_certificate(sys, P, eps, v.certificate)
        assert ok and sup == pytest.approx(v.certificate.achieved_sup)
        assert np.all(np.diff(v.certificate.h(v.certificate.time_grid)) > 0)
        assert v.certificate.h(0.0) == 0.0
    elif v.outcome is Outcome.NOT_SHADOWED:
        for k in ("candidates", "dt", "grid_spacing", "horizon_forward"):
            assert k in v.log


@pytest.mark.parametrize("name", COARSE)
def test_exact_orbit_is_shadowed_by_its_start(name):
    sys = registry.build(name)
    p = sys.space.sample(1, seed=5)[0]
    P = exact_orbit(sys, p, [1.3, 1.7, 1.1, 1.9], n_backward=2)
    v = decide_shadowing(sys, P, 0.05)
    assert v.outcome is Outcome.SHADOWED
    assert v.certificate.achieved_sup <= 0.05


def test_sin2_crossing_is_not_shadowed():
    sys = registry.build("sin2")
    # a chain that jumps across the fixed point at 0 (= 1) and keeps going
    P = generate_noisy(sys, [0.9], 0.0, n=2, seed=0)
    pts = np.array([[0.95], [0.02], [0.3]])
    Q = PseudoOrbit(pts, np.array([1.0, 1.0, 1.0]), 0, "forward")
    v = decide_forward_shadowing(sys, Q, 0.05)
    assert v.outcome is Outcome.NOT_SHADOWED
    assert P.n == 2


def test_certificate_rejects_tampering():
    sys = registry.build("rotation")
    P = generate_noisy(sys, [0.3], 0.01, n=4, n_backward=2, seed=1)
    v = decide_shadowing(sys, P, 0.05)
    assert v.shadowed
    Q = P.copy()
    Q.points[-1] = (Q.points[-1] + 0.3) % 1.0
    ok, sup = check_certificate(sys, Q, 0.05, v.certificate)
    assert not ok and sup > 0.05


def test_certificate_grid_must_cover_window():
    sys = registry.build("rotation")
    P = generate_noisy(sys, [0.3], 0.01, n=4, n_backward=2, seed=1)
    cert = decide_shadowing(sys, P, 0.05).certificate
    short = Certificate(cert.y, cert.h, cert.achieved_sup, cert.time_grid[: len(cert.time_grid) // 2], cert.epsilon,
                        cert.dt, cert.guarantee)
    with pytest.raises(GridError):
        check_certificate(sys, P, 0.05, short)
    sparse = Certificate(cert.y, cert.h, cert.achieved_sup, cert.time_grid[::7], cert.epsilon, cert.dt, cert.guarantee)
    with pytest.raises(GridError):
        check_certificate(sys, P, 0.05, sparse)


def test_certificate_json_round_trip():
    sys = registry.build("product-rotation")
    P = generate_noisy(sys, [0.3, 0.6], 0.01, n=3, n_backward=1, seed=2)
    cert = decide_shadowing(sys, P, 0.08).certificate
    back = Certificate.from_dict(__import__("json").loads(cert.to_json()))
    assert check_certificate(sys, P, 0.08, back)[0]
    assert np.array_equal(back.h.values, cert.h.values)


def test_budget_exhaustion_is_unknown():
    sys = registry.build("rotation")
    P = generate_noisy(sys, [0.3], 0.01, n=4, n_backward=2, seed=1)
    v = decide_shadowing(sys, P, 0.05, SearchConfig(max_cells=10))
    assert v.outcome is Outcome.UNKNOWN
    assert "budget" in v.log["reason"]


@pytest.mark.parametrize("name", ["rotation", "product-rotation"])
@given(seed=st.integers(0, 10**6), m=st.integers(1, 4))
def test_transport_replays_on_suffix(name, seed, m):
    sys = registry.build(name)
    rng = np.random.default_rng(seed)
    eps = 0.1
    chain = generate_noisy(sys, sys.space.sample(1, seed=seed)[0], 0.01, n=m, seed=seed)
    start = sys.space.perturb(sys.evolve(chain.points[-1], chain.durations[-1]), 0.01, rng)
    F = generate_noisy(sys, start, 0.01, n=4, seed=seed + 1)
    Z = prepend_chain(chain, F)
    v = decide_forward_shadowing(sys, Z, eps, SearchConfig(exhaustive=False))
    assert v.shadowed
    cert = transport_certificate(sys, v.certificate, m, Z)
    ok, sup = check_certificate(sys, F, eps, cert, forward_only=True)
    assert ok and sup <= eps + 1e-6


def test_reparam_in_certificate_is_monotone_through_origin():
    sys = registry.build("sin2")
    P = generate_noisy(sys, [0.4], 0.002, n=5, n_backward=3, seed=9)
    v = decide_shadowing(sys, P, 0.1)
    assert v.shadowed
    h = v.certificate.h
    assert isinstance(h, Reparam) and h(0.0) == 0.0
