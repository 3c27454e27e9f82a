import pytest

from shadowlab.errors import ModelError
from shadowlab.models import registry


def test_names_and_rows():
    rows = registry.listing()
    assert [r["name"] for r in rows] == registry.names()
    for r in rows:
        assert set(r) >= {"name", "space", "kind", "claim", "parameters"}


def test_unknown_model_and_parameter():
    with pytest.raises(ModelError, match="unknown model"):
        registry.build("nope")
    with pytest.raises(ModelError, match="does not take"):
        registry.build("rotation", speed=2)


def test_build_is_cached_per_parameters():
    assert registry.build("rotation") is registry.build("rotation")
    a = registry.build("cantor-interval-identity", level=3)
    b = registry.build("cantor-interval-identity", level=4)
    assert a is not b


def test_registry_is_read_only():
    with pytest.raises(TypeError):
        registry.REGISTRY["x"] = None
