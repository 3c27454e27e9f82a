import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from shadowlab.core import Reparam


@st.composite
def reparams(draw):
    n_neg = draw(st.integers(0, 5))
    n_pos = draw(st.integers(0, 5))
    dt = draw(st.lists(st.floats(0.05, 3.0), min_size=n_neg + n_pos, max_size=n_neg + n_pos))
    dv = draw(st.lists(st.floats(0.05, 3.0), min_size=n_neg + n_pos, max_size=n_neg + n_pos))
    t = np.concatenate([-np.cumsum(dt[:n_neg])[::-1], [0.0], np.cumsum(dt[n_neg:])])
    v = np.concatenate([-np.cumsum(dv[:n_neg])[::-1], [0.0], np.cumsum(dv[n_neg:])])
    return Reparam(t, v, draw(st.floats(0.2, 5)), draw(st.floats(0.2, 5)))


@given(h=reparams(), t=st.lists(st.floats(-20, 20), min_size=1, max_size=20))
def test_inverse_round_trip(h, t):
    t = np.array(t)
    assert np.allclose(h.inverse(h(t)), t, atol=1e-9)


@given(h=reparams(), t=st.lists(st.floats(-20, 20), min_size=2, max_size=20))
def test_strictly_increasing_and_fixes_origin(h, t):
    t = np.unique(np.round(np.array(t), 6))
    assert h(0.0) == 0.0
    if t.size > 1:
        assert np.all(np.diff(h(t)) > 0)
    assert np.all(h.slopes() > 0)


@given(h=reparams(), c=st.floats(-10, 10), t=st.lists(st.floats(-10, 10), min_size=1, max_size=10))
def test_shift_law(h, c, t):
    g = h.shift(c)
    t = np.array(t)
    assert g(0.0) == 0.0
    assert np.allclose(g(t), h(t + c) - h(c), atol=1e-9)


@given(h=reparams())
def test_dict_round_trip(h):
    g = Reparam.from_dict(h.to_dict())
    assert np.array_equal(g.times, h.times) and np.array_equal(g.values, h.values)
    assert (g.left_slope, g.right_slope) == (h.left_slope, h.right_slope)


def test_rejects_bad_anchors():
    with pytest.raises(ValueError):
        Reparam(np.array([0.0, 1.0]), np.array([0.0, 0.0]))
    with pytest.raises(ValueError):
        Reparam(np.array([1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        Reparam.linear(0.0)
