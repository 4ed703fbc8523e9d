from __future__ import annotations

from pathlib import Path

import pytest

from ttcgoals.cli import InstanceDocument, parse_instance

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def load_fixture(name: str) -> InstanceDocument:
    return parse_instance((FIXTURES / f"{name}.json").read_text())


@pytest.fixture(scope="session")
def appendix_a() -> InstanceDocument:
    return load_fixture("appendix_a")


@pytest.fixture(scope="session")
def example_1() -> InstanceDocument:
    return load_fixture("example_1")


@pytest.fixture(scope="session")
def appendix_b() -> InstanceDocument:
    return load_fixture("appendix_b")


# The two undominated improving individually-rational matchings of the
# example_1 fixture, keyed by student identifier.
EXAMPLE_1_MU = {"s1": "c6", "s2": "c2", "s3": "c4", "s4": "c3", "s5": "c5", "s6": "c1"}
EXAMPLE_1_MU_TILDE = {"s1": "c1", "s2": "c6", "s3": "c5", "s4": "c4", "s5": "c3", "s6": "c2"}

# The documented mechanism outcome for the appendix_a fixture.
APPENDIX_A_OUTCOME = {
    "s1": "c2", "s2": "c1", "s3": "c4", "s4": "c1", "s5": "c1", "s6": "c3", "s7": "c2",
}
