import pytest

import densify.extraction as extraction

from densify.calculus import Rule, SystemId, check_proof
from densify.errors import CopyWitnessError, ExtractionError, InvariantViolation
from densify.extraction import (
    entry_template,
    extract_multi,
    extract_single,
    instantiate_elimination,
    intersection_node,
    leads_to,
    origin_monotone,
)
from densify.syntax import eigen_profile, is_closed

from .proofs import matches

H1, H2, H3 = (1, 1, 0, 0, 0), (1, 1, 1, 0, 0), (1,)


@pytest.fixture
def entries(g0_trace):
    """
    Fixture to provide registry indexes keyed by the node each entry sits at.
    """
    return {e.node: e.index for e in g0_trace.registry.active()}


@pytest.mark.parametrize(
    "node,conclusion",
    [
        (H1, "=> p2, B | B => p4, ~A * ~A | A => p3 | p3, p4 => A * A"),
        (H2, "=> p2, B | B => p4, ~A * ~A | A => p1 | p1 => C | C, p2 => A * A"),
        (H3, "p1 => C | C, p2 => A * A"),
    ],
)
def test_entry_templates(g0_trace, entries, node, conclusion):
    rule = entry_template(g0_trace.tau_star, g0_trace.registry, [entries[node]])
    assert matches(rule.conclusion, conclusion)
    assert rule.entries == (entries[node],)
    assert not rule.is_identity
    (leaf,) = rule.leaves
    assert leaf[1] == node
    assert len(rule.focus_of(leaf[0])) == 1
    assert origin_monotone(rule)


@pytest.mark.parametrize("node", [H1, H2, H3])
def test_entry_template_checks_on_closed_copies(g0_trace, entries, node):
    trace = g0_trace
    entry = trace.registry[entries[node]]
    rule = entry_template(trace.tau_star, trace.registry, [entry.index])
    omega = SystemId.from_value("giul-omega")

    out, _ = instantiate_elimination(rule, [(trace.tau_star, tuple(entry.copies)[:1])], trace.ids, omega)
    assert tuple(entry.copies)[0] not in out.conclusion
    assert check_proof(omega, out, allow_open=True) is None


def test_leads_to(g0_trace, entries):
    tau_star, registry = g0_trace.tau_star, g0_trace.registry
    h1, h2, h3 = entries[H1], entries[H2], entries[H3]
    assert leads_to(tau_star, registry, h1, h3)
    assert leads_to(tau_star, registry, h1, h2)
    assert not leads_to(tau_star, registry, h3, h1)
    assert not leads_to(tau_star, registry, h3, h2)


def test_intersection_node(g0_trace):
    found = intersection_node(g0_trace.tau_star, [H1, H2])
    assert found.node == (1, 1)
    assert found.left == (H1,)
    assert found.right == (H2,)
    assert intersection_node(g0_trace.tau_star, [H3]).node == H3
    with pytest.raises(ExtractionError):
        intersection_node(g0_trace.tau_star, [H3, H1])


def test_two_focus_template(g0_trace, entries):
    rule = entry_template(g0_trace.tau_star, g0_trace.registry, [entries[H1], entries[H2]])
    assert sorted(origin for _, origin in rule.leaves) == [H1, H2]


def test_extraction_errors(g0_trace):
    tau_star = g0_trace.tau_star
    with pytest.raises(ExtractionError):
        extract_multi(tau_star, {})
    with pytest.raises(ExtractionError):
        extract_multi(tau_star, {H3: (1,), H1: (1,)})
    with pytest.raises(ExtractionError):
        extract_single(tau_star, H3, (10_000,))


def test_root_extraction_is_identity(g0_trace):
    root = g0_trace.tau_star.conclusion
    rule = extract_single(g0_trace.tau_star, (), root.ids[:1])
    assert rule.is_identity
    assert rule.derivation.rule is Rule.OPEN


def test_instantiate_on_root_copy(g0_trace, entries):
    trace = g0_trace
    entry = trace.registry[entries[H3]]
    (copy,) = entry.copies
    rule = entry_template(trace.tau_star, trace.registry, [entry.index])
    omega = SystemId.from_value("giul-omega")

    out, origin = instantiate_elimination(rule, [(trace.tau_star, (copy,))], trace.ids, omega)
    assert len(out.conclusion) == 8
    assert copy not in out.conclusion
    assert is_closed(out.conclusion)
    assert check_proof(omega, out, allow_open=True) is None
    assert set(origin.values()) == set(rule.conclusion.ids)

    root = trace.tau_star.conclusion
    other = next(c for c, s in root if str(s.strip_eigens()) == "=> B")
    with pytest.raises(CopyWitnessError):
        instantiate_elimination(rule, [(trace.tau_star, (other,))], trace.ids, omega)


def test_entry_templates_need_entries_leading_to_each_other(g0_trace, entries):
    tau_star, registry = g0_trace.tau_star, g0_trace.registry
    with pytest.raises(ExtractionError, match="does not lead"):
        entry_template(tau_star, registry, [entries[H3], entries[H1]])
    with pytest.raises(ExtractionError, match="does not lead"):
        entry_template(tau_star, registry, [entries[H1], entries[H3]])


def test_extraction_balances_eigens(g0_trace, entries, monkeypatch):
    tau_star, registry = g0_trace.tau_star, g0_trace.registry
    rule = entry_template(tau_star, registry, [entries[H3]])
    focus = rule.focus_of(rule.leaves[0][0])
    assert eigen_profile(rule.conclusion)[0] - eigen_profile(focus)[0] == set()

    profiles = iter([(frozenset({1}), frozenset()), (frozenset(), frozenset())])
    monkeypatch.setattr(extraction, "eigen_profile", lambda g: next(profiles))
    with pytest.raises(InvariantViolation) as e:
        entry_template(tau_star, registry, [entries[H3]])
    assert e.value.stage == "extraction"
