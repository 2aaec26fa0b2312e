from pathlib import Path

import pytest

from folp.syntax import eliminate_constraints, parse_program

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"
GOLDEN = Path(__file__).resolve().parent / "golden"


def load(name: str):
    return parse_program((PROGRAMS / name).read_text(encoding="utf-8"))


@pytest.fixture(scope="session")
def membership():
    """Support-based membership program: two constants, one constraint,
    a free binary predicate; the satisfiable flagship example."""
    return load("membership.folp")


@pytest.fixture(scope="session")
def membership_t(membership):
    return eliminate_constraints(membership)


@pytest.fixture(scope="session")
def membership_loop():
    """The self-supporting restriction: smember is unsatisfiable but every
    candidate chain keeps a dependency path, so blocking never fires."""
    return load("membership_loop.folp")


@pytest.fixture(scope="session")
def choice_chain():
    """p is forced everywhere by its self-refuting rule; q is locally
    satisfiable but globally unsatisfiable."""
    return load("choice_chain.folp")
