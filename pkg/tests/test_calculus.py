import pytest

from densify.builder import DerivationBuilder
from densify.calculus import (
    Derivation,
    Relation,
    Rule,
    SystemId,
    below,
    check_labeling,
    check_proof,
    common_ancestor,
    detect_full_ec,
    parallel,
    position,
    proof_stats,
    relate,
    strictly_below,
    thread,
    verify_proof,
)
from densify.errors import AddressError, RuleViolation
from densify.syntax import Atom, Eigen, IdSource, Sequent, parse_hypersequent

from .proofs import G0

A = Atom("A")


def test_system_id():
    s = SystemId.from_value("GIUL-Omega")
    assert s.omega
    assert str(s) == "giul-omega"
    assert str(s.as_base()) == "giul"
    assert SystemId.from_value("gul").single_conclusion
    assert SystemId.from_value("gmtl").single_conclusion
    assert not SystemId.from_value("giul").single_conclusion
    assert SystemId.from_value("gimtl").weakening
    assert not SystemId.from_value("gul").weakening
    with pytest.raises(ValueError, match="Invalid system"):
        SystemId.from_value("gl")


def test_rule_names():
    assert Rule.from_value("⊙_r") is Rule.FUS_R
    assert Rule.from_value("EC_Ω*") is Rule.EC_OMEGA_STAR
    assert Rule.from_value("imp_l") is Rule.IMP_L
    assert Rule.COM.arity == 2
    assert Rule.ID.is_leaf
    assert Rule.IMP_R.rule_class == "I"
    assert Rule.COM.rule_class == "II"
    assert Rule.EC.rule_class is None
    with pytest.raises(ValueError):
        Rule.from_value("mix")


@pytest.fixture
def small():
    """
    Fixture to provide COM over two identity leaves.
    """
    b = DerivationBuilder()
    left, right = b.axiom(A), b.axiom(Atom("B"))
    return b.com(left, 1, right, 2, Sequent.of([A], [Atom("B")]))


def test_tree_navigation(small):
    assert [addr for addr, _ in small.walk()] == [(), (0,), (1,)]
    assert [addr for addr, _ in small.postorder()] == [(0,), (1,), ()]
    assert small.node((1,)).conclusion == parse_hypersequent("B => B", [2])
    assert small.size == 3
    assert small.height == 1
    with pytest.raises(AddressError):
        small.node((2,))

    opened = small.replace_at((0,), Derivation(Rule.OPEN, small.node((0,)).conclusion))
    assert [addr for addr, _ in opened.open_leaves()] == [(0,)]
    assert opened.uses(Rule.OPEN)
    assert not small.uses(Rule.OPEN)
    assert check_proof(SystemId.from_value("giul"), opened) is not None
    assert check_proof(SystemId.from_value("giul"), opened, allow_open=True) is None


def test_tree_order(small):
    assert below((), (0, 1))
    assert below((0,), (0,))
    assert not strictly_below((0,), (0,))
    assert strictly_below((0,), (0, 1))
    assert parallel((0,), (1,))
    assert not parallel((), (1,))
    assert common_ancestor([(1, 1, 0, 0, 0), (1, 1, 1, 0, 0)]) == (1, 1)
    assert thread(small, (1,)) == [(1,), ()]
    assert position(small, (1,)) == 3
    assert relate(small, (), (1,)) is Relation.LE
    assert relate(small, (0,), (1,)) is Relation.PARALLEL
    with pytest.raises(AddressError):
        relate(small, (0, 0), ())


def test_example_proof_shape(g0_proof, giul):
    assert g0_proof.conclusion.same_multiset(parse_hypersequent(G0))
    assert g0_proof.size == 26
    assert g0_proof.height == 9
    counts = g0_proof.rule_counts()
    assert counts[Rule.EC] == 3
    assert counts[Rule.COM] == 6
    assert counts[Rule.FUS_R] == 3
    assert counts[Rule.ID] == 10
    assert check_proof(giul, g0_proof) is None
    assert verify_proof(giul, g0_proof) is g0_proof

    stats = proof_stats(g0_proof)
    assert stats["size"] == 26
    assert stats["rules"]["COM"] == 6


def test_example_proof_other_systems(g0_proof):
    violation = check_proof(SystemId.from_value("gul"), g0_proof)
    assert violation is not None and violation.label == "single-conclusion"

    violation = check_proof(SystemId.from_value("giul-omega"), g0_proof)
    assert violation.label == "unlabeled-eigen"
    assert violation.node == ()

    with pytest.raises(RuleViolation):
        verify_proof(SystemId.from_value("gul"), g0_proof)


def test_full_contractions(g0_proof):
    chains = detect_full_ec(g0_proof)
    assert len(chains) == 3
    assert all(c.multiplicity == 2 for c in chains)
    assert {str(c.sequent) for c in chains} == {"A => p", "p, p => A * A"}


def test_check_labeling():
    b = DerivationBuilder(IdSource())
    p1 = b.axiom(Eigen(1))
    ax = b.axiom(A)
    d = b.com(p1, 1, ax, 2, Sequent.of([A], [Eigen(1)]))
    assert check_proof(SystemId.from_value("giul-omega"), d) is None
    assert check_labeling(d) == []

    broken = b.axiom(Eigen(1))
    twice = b.com(broken, broken.conclusion.ids[0], d, 3, Sequent.of([Eigen(1)], [Eigen(1)]))
    problems = check_labeling(twice)
    assert problems
