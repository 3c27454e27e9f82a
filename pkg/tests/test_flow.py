import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowlab.core import check_flow_axioms
from shadowlab.errors import HorizonError
from shadowlab.models import registry

ANALYTIC = ["rotation", "sin2", "north-south", "product-rotation", "irrational-linear", "two-point-identity"]


@pytest.mark.parametrize("name", registry.names())
def test_every_model_passes_its_axiom_suites(name):
    rep = registry.axiom_report(name)
    assert all(part["ok"] for part in rep.values()), rep


@pytest.mark.parametrize("name", ANALYTIC)
@given(seed=st.integers(0, 2**31), s=st.floats(-5, 5), t=st.floats(-5, 5))
def test_group_law(name, seed, s, t):
    sys = registry.build(name)
    x = sys.space.sample(1, seed=seed)[0]
    a = sys.evolve(sys.evolve(x, s), t)
    b = sys.evolve(x, s + t)
    assert sys.space.dist(a, b) <= 1e-9


@pytest.mark.parametrize("name", ANALYTIC)
@given(seed=st.integers(0, 2**31), t=st.floats(-3, 3), h=st.floats(1e-4, 0.05))
def test_speed_bound(name, seed, t, h):
    sys = registry.build(name)
    x = sys.space.sample(1, seed=seed)[0]
    d = sys.space.dist(sys.evolve(x, t), sys.evolve(x, t + h))
    assert d <= sys.speed_bound * h * (1 + 1e-6) + 1e-12


@pytest.mark.parametrize("name", ANALYTIC)
@given(seed=st.integers(0, 2**31), t=st.floats(-2, 2), r=st.floats(1e-6, 1e-2))
def test_lipschitz_bound(name, seed, t, r):
    sys = registry.build(name)
    rng = np.random.default_rng(seed)
    x = sys.space.sample(1, seed=seed)[0]
    y = sys.space.perturb(x, r, rng)
    d0 = sys.space.dist(x, y)
    d1 = sys.space.dist(sys.evolve(x, t), sys.evolve(y, t))
    assert d1 <= sys.lipschitz(abs(t)) * d0 * (1 + 1e-6) + 1e-12


def test_rotation_is_unit_speed():
    rot = registry.build("rotation")
    assert rot.evolve(np.array([0.25]), 0.5)[0] == pytest.approx(0.75)


def test_sin2_fixes_zero_and_moves_forward():
    f = registry.build("sin2")
    assert f.evolve(np.array([0.0]), 7.0)[0] == 0.0
    x = f.evolve(np.array([0.3]), 1.0)[0]
    assert 0.3 < x < 1.0


def test_horizon_is_enforced():
    rot = registry.build("rotation")
    with pytest.raises(HorizonError):
        rot.evolve(np.array([0.1]), 10 * rot.horizon)


def test_flow_axiom_check_detects_a_broken_flow():
    rot = registry.build("rotation")

    class Broken(type(rot)):
        def flow(self, points, times):
            return super().flow(points, np.asarray(times) * np.asarray(times))

    rep = check_flow_axioms(Broken(), n=50, t_max=2.0)
    assert not rep["ok"]
