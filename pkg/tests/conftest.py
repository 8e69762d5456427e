"""Shared test fixtures and configuration"""

import os
import tempfile

import pytest

# Set environment variables BEFORE any other imports
os.environ["DENORM_LOG_LEVEL"] = "WARNING"
os.environ["DENORM_LOGS_DIR"] = os.path.join(tempfile.gettempdir(), "denorm-test-logs")
os.environ.pop("DENORM_CONFIG", None)

from src.config import FIXTURE_PATH  # noqa: E402
from src.generator import generate  # noqa: E402
from src.models import (  # noqa: E402
    Concept,
    DataModel,
    Endpoint,
    KeyValue,
    Reference,
    Row,
    SizeProfile,
    Statistics,
)
from src.schema import find_model, keyed_signature  # noqa: E402
from src.workload import load_use_case_file  # noqa: E402

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def make_row(name, keys, primary_key=None, rank=0, sizes=None):
    """Top-level row with ordinals in declaration order"""
    sizes = sizes or {}
    return Row(
        name=name,
        keys=tuple(
            KeyValue(name=k, ordinal=i, base_size=sizes.get(k, 8))
            for i, k in enumerate(keys)
        ),
        primary_key=primary_key or keys[0],
        rank=rank,
    )


def reference(source, target, cardinality=1.0):
    return Reference(
        source=Endpoint.parse(source),
        target=Endpoint.parse(target),
        cardinality=cardinality,
    )


@pytest.fixture(scope="session")
def use_case():
    """Bundled TPC-C use case"""
    return load_use_case_file(FIXTURE_PATH)


@pytest.fixture(scope="session")
def generation(use_case):
    """Every model generated from the TPC-C root with query pruning"""
    return generate(use_case.model, use_case.queries)


@pytest.fixture(scope="session")
def reference_models(use_case, generation):
    """Labelled TPC-C models, label to model"""
    return {
        label: find_model(generation.models, selector)
        for label, selector in use_case.labels.items()
    }


@pytest.fixture(scope="session")
def reference_labels(reference_models):
    """Keyed signature to label, as the simulator expects"""
    return {keyed_signature(model): label for label, model in reference_models.items()}


@pytest.fixture
def two_concept_model():
    """A(a_ID, a1, a2) referenced by B(b_ID, b1, b2, a_b_ID), three Bs per A"""
    a = make_row("A", ["a_ID", "a1", "a2"], rank=0)
    b = make_row("B", ["b_ID", "b1", "b2", "a_b_ID"], rank=1)
    return DataModel(
        name="M0",
        concepts=(Concept(name="Alpha", rows=(a,)), Concept(name="Beta", rows=(b,))),
        references=(reference("B.a_b_ID", "A.a_ID", 3),),
    )


@pytest.fixture
def two_concept_stats():
    keys = ["a_ID", "a1", "a2", "b_ID", "b1", "b2", "a_b_ID"]
    return Statistics(
        selectivity={"a1": 0.01, "b1": 0.001},
        profile=SizeProfile(key_size={k: 8 for k in keys}, row_count={"A": 100, "B": 300}),
        index_present=("a_ID", "b_ID", "a_b_ID", "a1"),
    )
