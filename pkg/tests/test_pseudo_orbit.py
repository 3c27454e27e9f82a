import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowlab.errors import ConstructionError
from shadowlab.models import registry
from shadowlab.pseudo_orbit import (KICK_MARGIN, PseudoOrbit, UniformKick, coarsen_steps, exact_orbit,
                                    generate_noisy, jumps, periodic_extension, prepend_chain, read_csv,
                                    refine_to_bounded_steps, splice_through_point, star, star_many, trace_grid,
                                    validate, write_csv)

MODELS = ["rotation", "sin2", "product-rotation", "north-south"]


def _noisy(name, seed, delta, n=6, nb=3):
    sys = registry.build(name)
    p = sys.space.sample(1, seed=seed)[0]
    return sys, generate_noisy(sys, p, delta, n=n, n_backward=nb, t_range=(1.0, 2.0), seed=seed)


@pytest.mark.parametrize("name", MODELS)
@given(seed=st.integers(0, 10**6), delta=st.floats(1e-5, 0.05))
def test_generated_orbits_validate(name, seed, delta):
    sys, P = _noisy(name, seed, delta)
    rep = validate(P, sys, delta, 1.0, 2.0)
    assert rep.ok, rep.to_dict()
    assert rep.max_jump <= delta * (1 - KICK_MARGIN) + 1e-12


@pytest.mark.parametrize("name", MODELS)
@given(seed=st.integers(0, 10**6))
def test_star_hits_entries_at_partial_sums(name, seed):
    sys, P = _noisy(name, seed, 0.01)
    s = P.partial_sums()
    for k in range(P.n):
        assert sys.space.dist(star(P, sys, s[k]), P.points[k]) <= 1e-12


@given(seed=st.integers(0, 10**6))
def test_star_of_exact_orbit_is_the_orbit(seed):
    sys = registry.build("sin2")
    rng = np.random.default_rng(seed)
    p = sys.space.sample(1, seed=seed)[0]
    P = exact_orbit(sys, p, rng.uniform(1, 2, 8), n_backward=3)
    t = rng.uniform(P.partial_sums()[0], P.partial_sums()[-1], 20)
    assert np.max(sys.space.paired(star_many(P, sys, t), sys.evolve_many(p, t))) <= 1e-9
    assert validate(P, sys, 1e-9, 1.0).ok


def test_partial_sums_three_cases():
    P = PseudoOrbit(np.zeros((5, 1)), np.array([1.0, 2.0, 3.0, 4.0, 5.0]), -2, "bi")
    assert np.allclose(P.partial_sums(), [-3.0, -2.0, 0.0, 3.0, 7.0, 12.0])


def test_trace_grid_hits_partial_sums_and_respects_step():
    sys, P = _noisy("rotation", 4, 0.01)
    times, pts, i0 = trace_grid(P, sys, 0.1)
    assert times[i0] == 0.0
    assert np.max(np.diff(times)) <= 0.1 + 1e-12
    for s in P.partial_sums()[:-1]:
        assert np.min(np.abs(times - s)) <= 1e-12


@pytest.mark.parametrize("name", MODELS)
@given(seed=st.integers(0, 10**6), a=st.floats(0.1, 0.5))
def test_refine_validates_and_keeps_trace(name, seed, a):
    sys, P = _noisy(name, seed, 0.01)
    Q = refine_to_bounded_steps(P, sys, a)
    assert validate(Q, sys, 0.01, a, 2 * a).ok
    assert np.all(Q.durations < 2 * a + 1e-12)
    t = np.linspace(P.partial_sums()[0] + 1e-9, P.partial_sums()[-1] - 1e-9, 40)
    assert np.max(sys.space.paired(star_many(P, sys, t), star_many(Q, sys, t))) <= 1e-9


def test_refine_needs_long_steps():
    sys, P = _noisy("rotation", 1, 0.01)
    with pytest.raises(ConstructionError):
        refine_to_bounded_steps(P, sys, 0.9)


@pytest.mark.parametrize("name", ["rotation", "product-rotation"])
@given(seed=st.integers(0, 10**6), m=st.integers(1, 4))
def test_coarsen_validates_at_reported_bound(name, seed, m):
    sys, P = _noisy(name, seed, 1e-4, n=12, nb=5)
    Q, rep = coarsen_steps(P, sys, m, 0.01)
    assert validate(Q, sys, rep["jump_bound"], m * 1.0).ok
    assert rep["jump_bound"] < 0.01


def test_coarsen_rejects_when_bound_too_large():
    sys, P = _noisy("rotation", 2, 0.01, n=12)
    with pytest.raises(ConstructionError):
        coarsen_steps(P, sys, 4, 0.01)


@given(seed=st.integers(0, 10**6), r=st.floats(0, 0.01))
def test_splice_bounds(seed, r):
    sys, P = _noisy("sin2", seed, 0.005)
    p = sys.space.perturb(P.point(0), r, np.random.default_rng(seed))
    Q, rep = splice_through_point(P, sys, p)
    assert np.allclose(Q.point(0), p)
    assert rep["jump_before"] <= rep["bound_before"] + 1e-12
    assert rep["jump_after"] <= rep["bound_after"] + 1e-12


def test_prepend_chain_indexes():
    sys = registry.build("rotation")
    chain = generate_noisy(sys, [0.1], 0.01, n=3, seed=0)
    F = generate_noisy(sys, [0.7], 0.01, n=4, seed=1)
    Z = prepend_chain(chain, F)
    assert Z.n == 7 and Z.index_low == 0
    assert np.allclose(Z.point(3), F.point(0))
    with pytest.raises(ConstructionError):
        prepend_chain(chain, generate_noisy(sys, [0.7], 0.01, n=4, n_backward=1, seed=1))


def test_periodic_extension_repeats():
    sys = registry.build("rotation")
    Q = generate_noisy(sys, [0.2], 0.0, n=3, seed=0)
    E = periodic_extension(Q, 2, 2)
    assert E.index_low == -6 and E.n == 12
    assert np.allclose(E.point(-3), Q.point(0)) and np.allclose(E.point(4), Q.point(1))


@given(seed=st.integers(0, 10**6))
def test_csv_round_trip_is_exact(tmp_path_factory, seed):
    sys, P = _noisy("product-rotation", seed, 0.01)
    path = tmp_path_factory.mktemp("po") / "p.csv"
    write_csv(P, path)
    Q = read_csv(path)
    assert Q.index_low == P.index_low
    assert np.array_equal(Q.points, P.points) and np.array_equal(Q.durations, P.durations)
    assert np.array_equal(jumps(Q, sys), jumps(P, sys))


def test_uniform_kick_respects_delta():
    sys = registry.build("product-rotation")
    rng = np.random.default_rng(0)
    z = np.array([0.5, 0.5])
    for _ in range(200):
        assert sys.space.dist(z, UniformKick()(sys, z, 0.03, rng)) <= 0.03
