import itertools

import pytest

from densify.calculus import Rule, SystemId, check_proof
from densify.config import SearchBudget
from densify.prover import prove, prove_all_splits, prove_checked
from densify.syntax import parse_hypersequent


@pytest.mark.parametrize(
    "goal,rule",
    [
        ("A => A", Rule.ID),
        ("=> A -> A", Rule.IMP_R),
        ("A, B => A * B", Rule.FUS_R),
        ("A => B | B => A", Rule.COM),
        ("p => A | A => p", Rule.COM),
        ("A /\\ B => A", Rule.AND_LR),
        ("t, A => A", Rule.T_L),
        ("=> t", Rule.T_R),
        ("A => top", Rule.TOP_R),
    ],
)
def test_prove_giul(giul, goal, rule):
    g = parse_hypersequent(goal)
    d = prove(giul, g)
    assert d is not None
    assert d.rule is rule
    assert d.conclusion.same_multiset(g)
    assert check_proof(giul, d) is None


def test_prove_checked(giul):
    g = parse_hypersequent("A * B => B * A")
    d = prove_checked(giul, g)
    assert d is not None
    assert check_proof(giul, d) is None


def test_budget_limits_search(giul):
    assert prove(giul, parse_hypersequent("=> A"), SearchBudget(depth=3)) is None
    assert prove(giul, parse_hypersequent("A, B => A"), SearchBudget(depth=3)) is None


def test_weakening_systems():
    g = parse_hypersequent("A, B => A")
    gmtl = SystemId.from_value("gmtl")
    d = prove(gmtl, g, SearchBudget(depth=3))
    assert d is not None
    assert d.uses(Rule.WL)
    assert check_proof(gmtl, d) is None


def test_single_conclusion_system():
    gul = SystemId.from_value("gul")
    d = prove(gul, parse_hypersequent("A => B | B => A"))
    assert d is not None
    assert check_proof(gul, d) is None


def test_prove_all_splits(giul):
    proofs = list(itertools.islice(prove_all_splits(giul, parse_hypersequent("A => B | B => A")), 3))
    assert proofs
    assert all(check_proof(giul, d) is None for d in proofs)


@pytest.mark.parametrize("system", ["gul", "gmtl"])
def test_single_conclusion_goals_need_single_succedents(system):
    sc = SystemId.from_value(system)
    assert prove(sc, parse_hypersequent("a, p => b | b => p, a")) is None
    assert list(prove_all_splits(sc, parse_hypersequent("=> a, b | a => a"))) == []


@pytest.mark.parametrize(
    "goal",
    ["a, p => b | b, a => p", "p => a | a => p", "a, b => a | b => b", "a => b | b => a | a => a"],
)
def test_single_conclusion_proofs_check(goal):
    gmtl = SystemId.from_value("gmtl")
    d = prove(gmtl, parse_hypersequent(goal), SearchBudget(depth=6))
    assert d is not None
    assert check_proof(gmtl, d) is None
