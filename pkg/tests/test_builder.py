from dataclasses import replace

import pytest

from densify.builder import (
    DerivationBuilder,
    annotate,
    component_ids,
    eigen_ids,
    expand_generalized,
    graft_copy,
    graft_onto,
    normalize_ids,
    refresh_ids,
    replace_open,
    strip_labels,
)
from densify.calculus import Derivation, Rule, SystemId, check_proof
from densify.errors import AnnotationError, CopyWitnessError, ShapeError
from densify.proofio import load_proof
from densify.syntax import Atom, Eigen, IdSource, Sequent, imp, parse_hypersequent

A, B, C = Atom("A"), Atom("B"), Atom("C")


@pytest.fixture
def labeled_base():
    """
    Fixture to provide a labeled COM proof of ``A => p1 | p1 => A``.
    """
    b = DerivationBuilder(IdSource())
    ax_p, ax_a = b.axiom(Eigen(1)), b.axiom(A)
    return b.com(ax_p, 1, ax_a, 2, Sequent.of([A], [Eigen(1)]))


def test_one_premise_rules(giul):
    b = DerivationBuilder()
    ax = b.axiom(A)
    d = b.imp_r(ax, 1, A, A)
    assert d.conclusion == parse_hypersequent("=> A -> A", [2])
    assert d.principal_ids == (2,)
    assert check_proof(giul, d) is None

    d = b.t_l(b.axiom(B), 3)
    assert str(d.conclusion) == "t, B => B"
    assert check_proof(giul, d) is None


def test_two_premise_rules(giul):
    b = DerivationBuilder()
    d = b.fus_r(b.axiom(A), 1, b.axiom(B), 2, A, B)
    assert str(d.conclusion) == "A, B => A * B"
    assert check_proof(giul, d) is None

    d = b.imp_l(b.axiom(A), 4, b.axiom(B), 5, A, B)
    assert d.conclusion[d.principal_ids[0]] == Sequent.of([A, imp(A, B)], [B])
    assert check_proof(giul, d) is None

    with pytest.raises(ShapeError):
        b.cut(b.axiom(A), 7, b.axiom(B), 8, C)
    with pytest.raises(ShapeError):
        b.com(b.axiom(A), 9, b.axiom(B), 10, Sequent.of([C], []))


def test_communication_principals(giul):
    b = DerivationBuilder()
    d = b.com(b.axiom(A), 1, b.axiom(B), 2, Sequent.of([B], [A]))
    first, second = d.principal
    assert (first.n, second.n) == (1, 2)
    assert d.conclusion[first.cid] == Sequent.of([B], [A])
    assert d.conclusion[second.cid] == Sequent.of([A], [B])
    assert check_proof(giul, d) is None


def test_contraction_keeps_the_kept_id(giul):
    b = DerivationBuilder()
    d = b.com(b.axiom(A), 1, b.axiom(A), 2, Sequent.of([A], [A]))
    kept, removed = d.principal_ids
    ec = b.ec(d, kept, removed)
    assert ec.conclusion.ids == (kept,)
    assert ec.principal_ids == (kept,)
    assert check_proof(giul, ec) is None


def test_density_node():
    b = DerivationBuilder()
    q = Atom("q")
    d = b.open(parse_hypersequent("q => B | A => q"))
    dd = b.density(d, 1, 2, q)
    assert str(dd.conclusion) == "A => B"
    assert check_proof(SystemId.from_value("giul"), dd, allow_open=True) is None


def test_refresh_ids(labeled_base):
    d, comp_map, eigen_map = refresh_ids(labeled_base, IdSource(next_eigen=7, next_component=20), eigen=True)
    assert comp_map == {1: 20, 2: 21, 3: 22, 4: 23}
    assert eigen_map == {1: 7}
    assert d.conclusion == parse_hypersequent("A => p7 | p7 => A", [22, 23])
    assert component_ids(d) == {20, 21, 22, 23}
    assert eigen_ids(d) == {7}


def test_graft_copy(labeled_base):
    target = parse_hypersequent("p5 => A | A => p5", [10, 11])
    d = graft_copy(labeled_base, target, IdSource(next_eigen=6, next_component=30))
    assert d.conclusion == target
    assert check_proof(SystemId.from_value("giul-omega"), d) is None

    with pytest.raises(CopyWitnessError):
        graft_copy(labeled_base, parse_hypersequent("B => p5 | p5 => A"), IdSource(next_component=30))


def test_graft_onto_and_replace_open(labeled_base):
    target = parse_hypersequent("A => p2 | p2 => A", [5, 6])
    d = graft_onto(Derivation(Rule.OPEN, target), labeled_base, IdSource(next_eigen=3, next_component=40))
    assert not d.open_leaves()
    assert d.conclusion == target

    with pytest.raises(ShapeError):
        replace_open(Derivation(Rule.OPEN, target), lambda _addr, _leaf: labeled_base)


@pytest.mark.parametrize("rule", [Rule.AND_RW, Rule.OR_LW])
def test_expand_generalized(giul, rule):
    b = DerivationBuilder()
    make = b.and_rw if rule is Rule.AND_RW else b.or_lw
    d = make(b.axiom(A), 1, b.axiom(B), 2, A, B)
    assert check_proof(giul, d) is None

    out = expand_generalized(d, IdSource())
    assert not out.uses(rule)
    assert out.uses(Rule.COM) and out.uses(Rule.CUT)
    assert out.conclusion == d.conclusion
    assert check_proof(giul, out) is None


def _unannotated(d: Derivation) -> Derivation:
    return replace(d, focus=(), principal=(), premises=tuple(_unannotated(p) for p in d.premises))


def test_annotate(giul, g0_proof):
    bare = _unannotated(g0_proof)
    assert check_proof(giul, bare) is not None
    done = annotate(giul, bare)
    assert check_proof(giul, done) is None
    assert done.conclusion == g0_proof.conclusion


def test_annotate_ambiguous_or_impossible(giul):
    g = parse_hypersequent("A => A | A => A")
    stub = Derivation(Rule.OPEN, g)
    bad = Derivation(Rule.T_L, parse_hypersequent("B => B", [3]), (stub,))
    with pytest.raises(AnnotationError):
        annotate(giul, bad)


def test_normalize_hand_written_ids(giul):
    text = """
    {"system": "giul", "proof": {"rule": "COM", "conclusion": "A => B | B => A",
      "premises": [{"rule": "ID", "conclusion": "A => A"}, {"rule": "ID", "conclusion": "B => B"}]}}
    """
    system, d = load_proof(text)
    d = annotate(system, d)
    assert check_proof(giul, d) is None

    d = normalize_ids(d, IdSource())
    assert component_ids(d) == {1, 2, 3, 4}
    assert d.conclusion.ids == (3, 4)
    assert check_proof(giul, d) is None


def test_strip_labels(labeled_base):
    assert strip_labels(labeled_base).conclusion.same_multiset(parse_hypersequent("A => p | p => A"))
