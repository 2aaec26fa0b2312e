import itertools
import random

import pytest

from folp.oracle import (
    GroundProgram,
    GroundRule,
    OpenInterpretation,
    OracleBudgetError,
    Universe,
    answer_sets,
    bounded_sat,
    gl_reduct,
    ground,
    is_answer_set,
    least_model,
    satisfies_rule,
)
from folp.syntax import parse_program

FIG_MODEL = frozenset(
    {
        ("rmember", ("a",)),
        ("rmember", ("b",)),
        ("smember", ("u1",)),
        ("support", ("u1", "a")),
        ("support", ("u1", "b")),
    }
)


def u(*elements):
    return Universe(tuple(elements))


def test_grounding_counts_all_substitutions():
    program = parse_program("smember(X) :- support(X,Y), smember(Y).\n")
    gp = ground(program, u("x", "a"))
    assert len(gp.rules) == 4  # two variables over two elements


def test_grounding_contains_expected_instance(membership):
    gp = ground(membership, u("a", "b", "u1"))
    expected = GroundRule(
        head=("smember", ("u1",)),
        pos=(
            ("support", ("u1", "a")),
            ("rmember", ("a",)),
            ("support", ("u1", "b")),
            ("rmember", ("b",)),
        ),
        neg=(),
    )
    assert expected in gp.rules


def test_grounding_drops_instances_with_false_inequality():
    program = parse_program("p(X) :- f(X,Y), f(X,Z), Y != Z.\n")
    gp = ground(program, u("a"))
    assert gp.rules == ()  # the only grounding sets Y = Z


def test_grounding_drops_satisfied_inequalities(membership):
    gp = ground(membership, u("a", "b"))
    for rule in gp.rules:
        assert all(len(atom) == 2 for atom in rule.pos)


def test_reduct_of_free_rule_follows_interpretation():
    program = parse_program("a(x) v not a(x).\n")
    gp = ground(program, u("x"))
    kept = gl_reduct(gp, {("a", ("x",))})
    assert [r.head for r in kept.rules] == [("a", ("x",))]
    assert gl_reduct(gp, set()).rules == ()


def test_reduct_of_self_refuting_rule():
    program = parse_program("p(X) :- not p(X).\n")
    gp = ground(program, u("x"))
    assert gl_reduct(gp, {("p", ("x",))}).rules == ()
    reduct = gl_reduct(gp, set())
    assert [r.head for r in reduct.rules] == [("p", ("x",))]
    # consequently neither interpretation is an answer set
    assert not is_answer_set(program, OpenInterpretation(u("x"), frozenset()))
    assert not is_answer_set(
        program, OpenInterpretation(u("x"), frozenset({("p", ("x",))}))
    )


def test_reduct_is_positive(membership):
    gp = ground(membership, u("a", "b", "u1"))
    reduct = gl_reduct(gp, FIG_MODEL)
    assert all(not r.neg for r in reduct.rules)
    assert all(r.head is None or not r.choice for r in reduct.rules)


def test_least_model_simple_chain():
    a, b = ("a", ()), ("b", ())
    gp = GroundProgram((GroundRule(a, (), ()), GroundRule(b, (a,), ())))
    assert least_model(gp) == {a, b}
    assert least_model(GroundProgram(())) == frozenset()


def test_least_model_rejects_non_positive_input():
    gp = GroundProgram((GroundRule(("a", ()), (), (("b", ()),)),))
    with pytest.raises(ValueError):
        least_model(gp)


def test_least_model_monotone_and_idempotent():
    rng = random.Random(3)
    atoms = [(f"a{i}", ()) for i in range(6)]
    for _ in range(25):
        rules = tuple(
            GroundRule(
                rng.choice(atoms),
                tuple(rng.sample(atoms, rng.randint(0, 2))),
                (),
            )
            for _ in range(rng.randint(0, 8))
        )
        some_fact = GroundRule(rng.choice(atoms), (), ())
        small = least_model(GroundProgram(rules))
        large = least_model(GroundProgram(rules + (some_fact,)))
        assert small <= large
        again = least_model(
            GroundProgram(rules + tuple(GroundRule(a, (), ()) for a in small))
        )
        assert again == small


def test_reduct_of_membership_grounding_reproduces_model(membership):
    gp = ground(membership, u("a", "b", "u1"))
    plain = GroundProgram(tuple(r for r in gp.rules if r.head is not None))
    assert least_model(gl_reduct(plain, FIG_MODEL)) == FIG_MODEL


def test_is_answer_set_accepts_the_support_model(membership):
    interp = OpenInterpretation(u("a", "b", "u1"), FIG_MODEL)
    assert is_answer_set(membership, interp)


def test_is_answer_set_rejects_missing_support(membership):
    atoms = frozenset(FIG_MODEL - {("support", ("u1", "b"))})
    assert not is_answer_set(membership, OpenInterpretation(u("a", "b", "u1"), atoms))


def test_is_answer_set_rejects_unsupported_extra_atom(membership):
    atoms = frozenset(FIG_MODEL | {("smember", ("a",))})
    assert not is_answer_set(membership, OpenInterpretation(u("a", "b", "u1"), atoms))


def test_is_answer_set_refuses_atoms_outside_the_universe(membership):
    interp = OpenInterpretation(u("a", "b"), frozenset({("rmember", ("c",))}))
    with pytest.raises(ValueError):
        is_answer_set(membership, interp)


def test_answer_set_implies_every_ground_rule_satisfied(membership):
    interp = OpenInterpretation(u("a", "b", "u1"), FIG_MODEL)
    assert is_answer_set(membership, interp)
    gp = ground(membership, interp.universe)
    assert all(satisfies_rule(interp.atoms, r) for r in gp.rules)


def test_bounded_sat_finds_the_support_model(membership):
    witness = bounded_sat(membership, "smember", 3)
    assert witness is not None
    assert witness.universe.elements == ("a", "b", "u1")
    assert witness.atoms == FIG_MODEL
    assert is_answer_set(membership, witness)


def test_bounded_sat_witness_format_is_stable(membership):
    witness = bounded_sat(membership, "smember", 3)
    assert witness.format_witness() == (
        "element a\n"
        "element b\n"
        "element u1\n"
        "atom rmember(a)\n"
        "atom rmember(b)\n"
        "atom smember(u1)\n"
        "atom support(u1,a)\n"
        "atom support(u1,b)\n"
    )


def test_bounded_sat_on_a_single_fact():
    program = parse_program("rmember(a).\n")
    witness = bounded_sat(program, "rmember", 1)
    assert witness.universe.elements == ("a",)
    assert witness.atoms == {("rmember", ("a",))}


def test_bounded_sat_reports_none_for_the_loop_program(membership_loop):
    assert bounded_sat(membership_loop, "smember", 3) is None


def test_bounded_sat_none_is_not_a_proof():
    # needs two q-elements distinct from the p-element: three in total
    program = parse_program(
        "p(X) :- not q(X), f(X,Y), q(Y), f(X,Z), q(Z), Y != Z.\n"
        "q(X) v not q(X).\nf(X,Y) v not f(X,Y).\n"
    )
    assert bounded_sat(program, "p", 2) is None
    assert bounded_sat(program, "p", 3) is not None


def test_bounded_sat_budget_error(membership):
    with pytest.raises(OracleBudgetError):
        bounded_sat(membership, "smember", 3, budget=8)


def test_bounded_sat_rejects_unknown_predicate(membership):
    with pytest.raises(ValueError):
        bounded_sat(membership, "nope", 3)


def test_answer_sets_ordered_by_cardinality(membership):
    sets = answer_sets(membership, Universe.for_program(membership, 3))
    sizes = [len(s.atoms) for s in sets]
    assert sizes == sorted(sizes)
    assert all(is_answer_set(membership, s) for s in sets)


def _brute_force_answer_sets(program, universe):
    """Independent route: enumerate every subset of the ground atom base
    and apply the reduct fixpoint definition directly."""
    gp = ground(program, universe)
    base = sorted(gp.atoms())
    found = []
    for bits in itertools.product((False, True), repeat=len(base)):
        candidate = frozenset(a for a, keep in zip(base, bits) if keep)
        plain = GroundProgram(tuple(r for r in gp.rules if r.head is not None))
        if least_model(gl_reduct(plain, candidate)) != candidate:
            continue
        if not all(
            satisfies_rule(candidate, r) for r in gp.rules if r.head is None
        ):
            continue
        found.append(candidate)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def test_answer_sets_agree_with_subset_enumeration():
    programs = [
        "p(X) :- not q(X).\nq(X) :- not p(X).\n",
        "p(a).\nq(X) :- f(X,Y), p(Y).\nf(X,Y) v not f(X,Y).\n",
        "p(X) v not p(X).\n:- p(X), q(X).\nq(a).\n",
    ]
    for text in programs:
        program = parse_program(text)
        universe = Universe.for_program(program, max(1, len(program.constants)))
        fast = [s.atoms for s in answer_sets(program, universe)]
        assert fast == _brute_force_answer_sets(program, universe)


def test_universe_naming_avoids_constant_collisions():
    program = parse_program("p(u1).\n")
    universe = Universe.for_program(program, 2)
    assert universe.elements == ("u1", "u2")
