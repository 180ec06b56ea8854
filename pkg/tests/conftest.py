import json
from importlib import resources

import numpy as np
import pytest

from fracgreen import FractionalOrder, Kernel, Potential, assemble, build_grid


def _registry():
    from referencing import Registry, Resource

    reg = Registry()
    for p in resources.files("fracgreen.schemas").iterdir():
        if p.name.endswith(".schema.json"):
            reg = reg.with_resource(p.name, Resource.from_contents(json.loads(p.read_text())))
    return reg


def validate_report(doc):
    """Validate a JSON report against the schema named in its ``schema`` field."""
    import jsonschema

    from fracgreen.io import load_schema

    schema = load_schema(doc["schema"])
    jsonschema.Draft202012Validator(schema, registry=_registry()).validate(doc)


@pytest.fixture(scope="session")
def half_order():
    return FractionalOrder(0.5, 2)


@pytest.fixture(scope="session")
def pure_kernel(half_order):
    return Kernel(half_order)


@pytest.fixture(scope="session")
def grid33():
    return build_grid(2, 1.0, 33)


@pytest.fixture(scope="session")
def op33(pure_kernel, grid33):
    return assemble(pure_kernel, Potential(), grid33)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
