import pytest

from densify.builder import DerivationBuilder
from densify.calculus import Rule, check_proof
from densify.density import ProofTranslator, closure, closure_partition, collapse, d_rule, translate_proof
from densify.errors import NotClosedError, PipelineError
from densify.syntax import T, Atom, Eigen, IdSource, Sequent, parse_hypersequent, parse_sequent

A, B = Atom("A"), Atom("B")

G_WITH_COPIES = "=> p2, B | B => p4, ~A * ~A | p1 => C | C, p2 => A * A | A => p1 | A => p3 | p3, p4 => A * A"


@pytest.mark.parametrize(
    "labeled,collapsed",
    [
        ("p1 => p1", "=> t"),
        ("A => p1 | p1 => A", "A => A"),
        ("A => B", "A => B"),
        ("p1, p2 => A | B => p1, p2", "B => t, A"),
        (G_WITH_COPIES, "A => C | C => B, A * A | A, B => ~A * ~A, A * A"),
        (
            "=> p2, B | B => p4, ~A * ~A | p1 => C | C, p2 => A * A | => p1, B | p3 => C | C, p4 => A * A"
            " | B => p3, ~A * ~A",
            "=> B, C | C => A * A, B | B => C, ~A * ~A | C, B => A * A, ~A * ~A",
        ),
    ],
)
def test_d_rule(labeled, collapsed):
    assert d_rule(parse_hypersequent(labeled)).same_multiset(parse_hypersequent(collapsed))


def test_closures():
    g = parse_hypersequent(G_WITH_COPIES)
    c = closure(g, 2)
    assert sorted(c.members) == [2, 6, 7]
    assert c.t_count == 0
    assert c.cid == 2
    assert 6 in c and 1 not in c
    assert collapse(g, c) == parse_sequent("A, B => ~A * ~A, A * A")
    assert len(closure_partition(g)) == 3

    loop = parse_hypersequent("p1, p2 => A | B => p1, p2")
    assert closure(loop, 1).t_count == 1
    assert collapse(loop, closure(loop, 1)) == Sequent.of([B], [T, A])

    with pytest.raises(NotClosedError):
        d_rule(parse_hypersequent("A => p1"))


def test_translate_merged_communication(giul):
    b = DerivationBuilder()
    d = b.com(b.axiom(Eigen(1)), 1, b.axiom(A), 2, Sequent.of([A], [Eigen(1)]))
    translator = ProofTranslator(IdSource())
    out = translator.translate(d)
    assert str(out.conclusion) == "A => A"
    assert out.rule is Rule.CUT
    assert check_proof(giul, out) is None
    (note,) = translator.notes
    assert note.case == "merged"
    assert note.consistent


def test_translate_split_communication(giul):
    b = DerivationBuilder()
    d = b.com(b.axiom(Eigen(1)), 1, b.axiom(Eigen(2)), 2, Sequent.of([Eigen(1)], [Eigen(1)]))
    translator = ProofTranslator(IdSource())
    out = translator.translate(d)
    assert out.conclusion.same_multiset(parse_hypersequent("=> t | => t"))
    assert check_proof(giul, out) is None
    assert [n.case for n in translator.notes] == ["split"]
    assert translator.notes[0].consistent


def test_translation_rejects_base_rules():
    b = DerivationBuilder()
    d = b.com(b.axiom(A), 1, b.axiom(A), 2, Sequent.of([A], [A]))
    d = b.ec(d, *d.principal_ids)
    with pytest.raises(PipelineError) as e:
        translate_proof(d)
    assert e.value.stage == "translation"


def test_translate_preprocessed_example(g0_trace, giul):
    translator = ProofTranslator(g0_trace.ids)
    out = translator.translate(g0_trace.tau_star)
    assert out.conclusion == d_rule(g0_trace.tau_star.conclusion)
    assert check_proof(giul, out) is None
    assert translator.notes
    assert all(n.consistent for n in translator.notes)
    assert {n.case for n in translator.notes} <= {"joined", "split", "merged"}


def test_collapsed_labeled_root(g0_trace):
    expected = "A => C | A, B => A * A, ~A * ~A | C => A * A, B"
    assert d_rule(g0_trace.tau_star.conclusion).same_multiset(parse_hypersequent(expected))
