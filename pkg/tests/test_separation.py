from collections import Counter

import pytest

from densify.calculus import Derivation, Rule, SystemId, check_proof
from densify.density import d_rule
from densify.errors import InvariantViolation
from densify.separation import (
    Branch,
    LedgerEntry,
    SeparationContext,
    SeparationRun,
    Step,
    build_skeleton,
    check_branch,
    contract_full,
    duplicated_closures,
    eliminate_copies,
    separate_along,
    separate_multi,
    separate_one,
    skeleton_violations,
)
from densify.syntax import is_closed, parse_hypersequent

from .proofs import H0, matches

H1, H2, H3 = (1, 1, 0, 0, 0), (1, 1, 1, 0, 0), (1,)
V = (1, 1)

G0_PARTS = {"=> B", "B => ~A * ~A", "=> C", "C => A * A"}

SEPARATED_H1 = "=> p2, B | B => p4, ~A * ~A | p1 => C | C, p2 => A * A | A => p3 | => p1, B | p3 => C | C, p4 => A * A"
SEPARATED_H2 = "A => p1 | => p2, B | B => p4, ~A * ~A | p1 => C | C, p2 => A * A | B => p3, ~A * ~A | p3 => C | C, p4 => A * A"
SEPARATED_BOTH = "=> p2, B | B => p4, ~A * ~A | p1 => C | C, p2 => A * A | => p1, B | p3 => C | C, p4 => A * A | B => p3, ~A * ~A"


@pytest.fixture
def ctx(g0_trace, settings):
    """
    Fixture to provide a separation context over the preprocessed example.
    """
    return SeparationContext.from_trace(g0_trace, settings)


@pytest.fixture
def entries(g0_trace):
    return {e.node: e.index for e in g0_trace.registry.active()}


@pytest.fixture
def pair_run(ctx, entries):
    """
    Fixture to provide the joint separation of the two fusion entries.
    """
    return separate_multi(ctx, [entries[H1], entries[H2]])


def _stripped(g):
    return {str(s.strip_eigens()) for s in g.sequents}


def test_context(ctx, entries):
    assert ctx.system == SystemId.from_value("giul-omega")
    assert ctx.node_of(entries[H3]) == H3
    start = ctx.start()
    assert start.derivation.rule is Rule.OPEN
    assert start.step.kind == "branch"
    assert sorted(j for _, j in ctx.copies(start)) == sorted(entries.values())
    assert ctx.template([entries[H1]]) is ctx.template([entries[H1]])
    assert ctx.leads(entries[H1], entries[H2])
    assert ctx.leads(entries[H2], entries[H1])
    assert not ctx.leads(entries[H3], entries[H1])


@pytest.mark.parametrize(
    "text,expected",
    [
        ("A => p1 | p1 => C | A => p2 | p2 => C | B => B", [((1, 2), (3, 4))]),
        ("B => B | B => B", [((1,), (2,))]),
        ("A => p1 | p1 => C | B => B", []),
    ],
)
def test_duplicated_closures(text, expected):
    assert duplicated_closures(parse_hypersequent(text)) == expected


def test_separate_one(ctx, entries):
    run = separate_one(ctx, entries[H1])
    g = run.result.conclusion
    assert matches(g, SEPARATED_H1)
    assert run.owners == (entries[H1],)
    assert run.pivots[0] == entries[H1]
    assert run.case == "one"
    assert not [j for _, j in ctx.copies(run.result) if j in (entries[H1], entries[H3])]
    assert check_proof(ctx.system, run.result.derivation, allow_open=True) is None

    skeleton = build_skeleton(run)
    assert skeleton.root.step.kind in ("contract", "identity")
    assert skeleton.root.anchor == ()
    assert skeleton.is_linear
    (leaf,) = skeleton.leaves()
    assert leaf.anchor == H1


def test_separate_one_other_side(ctx, entries):
    run = separate_one(ctx, entries[H2])
    assert matches(run.result.conclusion, SEPARATED_H2)
    assert [j for _, j in ctx.copies(run.result)] == [entries[H1]]


def test_separated_density_conclusions(ctx, entries):
    h2 = "A => C | => B, C | C, B => A * A, ~A * ~A | C => A * A, B"
    h3 = "A => C | C => A * A, B | B => C, ~A * ~A | C, B => A * A, ~A * ~A"
    assert d_rule(separate_one(ctx, entries[H1]).result.conclusion).same_multiset(parse_hypersequent(h2))
    assert d_rule(separate_one(ctx, entries[H2]).result.conclusion).same_multiset(parse_hypersequent(h3))


def test_separate_root_entry_needs_a_valid_branch(ctx, entries):
    with pytest.raises(InvariantViolation) as e:
        separate_one(ctx, entries[H3])
    assert e.value.stage == "branch"


def test_check_branch(ctx, entries):
    check_branch(ctx, ctx.start(), entries[H1], [entries[H1]])
    separated = separate_one(ctx, entries[H1]).result
    with pytest.raises(InvariantViolation):
        check_branch(ctx, separated, entries[H1], [entries[H1]])
    with pytest.raises(InvariantViolation):
        check_branch(ctx, ctx.start(), entries[H1], [entries[H1], entries[H2]])


def test_contract_full_without_duplicates(ctx):
    start = ctx.start()
    assert contract_full(ctx, start) is start


def test_separate_multi(ctx, entries, pair_run):
    pair = [entries[H1], entries[H2]]
    result = pair_run.result
    assert pair_run.case == "graft"
    assert pair_run.intersection == V
    assert pair_run.pivots == []
    assert [part.owners for part in pair_run.parts] == [(entries[H1],), (entries[H2],)]
    assert matches(result.conclusion, SEPARATED_BOTH)
    assert not [j for _, j in ctx.copies(result) if j in pair]
    assert is_closed(result.conclusion)
    assert _stripped(result.conclusion) <= G0_PARTS
    assert check_proof(ctx.system, result.derivation, allow_open=True) is None
    assert d_rule(result.conclusion).same_multiset(parse_hypersequent(H0))


def test_separate_multi_from_given_branches(ctx, entries):
    h1, h2 = entries[H1], entries[H2]
    branches = [separate_one(ctx, h2).result, separate_one(ctx, h1).result]
    run = separate_multi(ctx, [h1, h2], branches)
    assert matches(run.result.conclusion, SEPARATED_BOTH)
    with pytest.raises(InvariantViolation):
        separate_multi(ctx, [h1, h2], [ctx.start(), ctx.start()])


def test_graft_skeleton(pair_run):
    skeleton = build_skeleton(pair_run)
    assert skeleton.root.anchor == ()
    assert not skeleton.is_linear
    (fused,) = [n for n in skeleton.nodes if n.step.phase == "graft"]
    assert fused.step.arity == 2
    assert sorted(fused.step.foci) == [H1, H2]
    assert sorted(skeleton.nodes[c].anchor for c in skeleton.children[skeleton.nodes.index(fused)]) == [H1, H2]
    assert {leaf.anchor for leaf in skeleton.leaves()} == {H1, H2}
    assert skeleton_violations(skeleton, V, [H1, H2]) == []


def test_graft_ledger(ctx, entries, pair_run):
    stages = [e.stage for e in pair_run.ledger]
    assert "left" in stages and "right" in stages
    assert all(e.block() is not None for e in pair_run.ledger)
    left = [e for e in pair_run.ledger if e.stage == "left"]
    assert left[-1].fused == 1
    removed, added = left[-1].block()
    assert (parse_hypersequent("A => p1")[1].strip_eigens().key(), entries[H2]) in removed
    assert all(j is None or j != entries[H1] for _, j in added)


def test_ledger_entry_blocks():
    before = Counter({"a": 2, "b": 1})
    after = Counter({"b": 1, "c": 2})
    assert LedgerEntry("left", 1, before, after, 2).block() == (Counter({"a": 1}), Counter({"c": 1}))
    assert LedgerEntry("left", 1, before, after, 0).block() is None
    assert LedgerEntry("left", 1, before, Counter({"b": 1, "c": 1}), 2).block() is None
    assert LedgerEntry("right", 2, before, before, 0).block() == (Counter(), Counter())


def test_skeleton_violations_name_the_property():
    g = parse_hypersequent("A => A")
    leaf = Step("branch", g)
    fused = Step("eliminate", g, (leaf, leaf), entries=(1, 2), foci=(H3, H3))
    root = Step("contract", g, (fused,))
    run = SeparationRun((1, 2), [], [], Branch(Derivation(Rule.OPEN, g), {}, root))
    labels = {label for label, _ in skeleton_violations(build_skeleton(run), V, [H1, H2])}
    assert {"multi-focus height", "one-premise below split"} <= labels


def test_index_family(ctx, entries):
    family = ctx.family
    h1, h2, h3 = entries[H1], entries[H2], entries[H3]
    assert family.resolve(frozenset()).conclusion == ctx.start().conclusion
    assert family.pick(ctx.start(), h2, frozenset()) == h2
    assert family.pick(ctx.start(), h1, frozenset()) == h1
    assert matches(family.resolve({h2}).conclusion, SEPARATED_H2)
    assert family.certified(family.resolve({h1}), {h1})
    everything = family.resolve({h1, h2, h3})
    assert ctx.copies(everything) == []
    assert family.resolve({h1, h2}) is everything


def test_eliminate_copies(ctx):
    branch = eliminate_copies(ctx)
    assert ctx.copies(branch) == []
    assert _stripped(branch.conclusion) <= G0_PARTS
    assert check_proof(ctx.system, branch.derivation, allow_open=True) is None
    assert d_rule(branch.conclusion).same_multiset(parse_hypersequent(H0))


def test_separate_along(ctx, entries):
    entry = ctx.registry[entries[H1]]
    g, d = separate_along(ctx, entry.node, (entry.focus,))
    assert g == d.conclusion
    assert d.open_leaves()
