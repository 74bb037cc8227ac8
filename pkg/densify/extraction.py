"""Elimination rules cut out of a labeled proof.

Pruning ``tau_star`` to what a focus component actually feeds gives a
derivation from that focus to a part of the root. The result is an
elimination rule: any copy of the focus, sitting in some closed context,
can be replaced by a relabeled copy of that part of the root.
"""

from typing import Optional
from dataclasses import dataclass, field
import itertools

from loguru import logger as log

from .builder import refresh_ids
from .calculus import (
    Derivation,
    NodeAddr,
    Rule,
    SystemId,
    below,
    check_node,
    common_ancestor,
    focus_layout,
    parallel,
)
from .errors import CopyWitnessError, ExtractionError, InvariantViolation
from .preprocess import PecRegistry
from .syntax import Hypersequent, IdSource, eigen_profile, find_copy_witness

Origin = dict[NodeAddr, NodeAddr]


@dataclass(frozen=True)
class EliminationRule:
    """A derivation from one or more foci to a part of the root of ``tau_star``.

    :param entries: Registry indexes the foci belong to (empty for ad hoc foci).
    :type entries: tuple[int, ...]
    :param foci: Address in ``tau_star`` to the focus component ids at that node.
    :type foci: dict
    :param derivation: The pruned derivation; its OPEN leaves are the foci.
    :type derivation: Derivation
    :param origin: Template address to the ``tau_star`` address the node was cut from.
    :type origin: dict
    """

    entries: tuple[int, ...]
    foci: dict
    derivation: Derivation
    origin: dict = field(default_factory=dict)

    @property
    def conclusion(self) -> Hypersequent:
        return self.derivation.conclusion

    @property
    def leaves(self) -> list[tuple[NodeAddr, NodeAddr]]:
        """``(template address, tau_star address)`` of every focus leaf."""
        return [(addr, self.origin[addr]) for addr, _ in self.derivation.open_leaves()]

    def focus_of(self, leaf: NodeAddr) -> Hypersequent:
        return self.derivation.node(leaf).conclusion

    @property
    def is_identity(self) -> bool:
        return self.derivation.rule is Rule.OPEN


def _whole(addr: NodeAddr, node: Derivation) -> Origin:
    return {rel: addr + rel for rel, _ in node.walk()}


def _prune(addr: NodeAddr, node: Derivation, foci: dict) -> Optional[tuple[Derivation, Origin]]:
    """Prune ``node`` to what the foci above it feed; None if no focus is above it."""
    if addr in foci:
        return Derivation(Rule.OPEN, node.conclusion.restrict(foci[addr])), {(): addr}
    if node.is_leaf:
        return None
    pruned = [_prune(addr + (i,), p, foci) for i, p in enumerate(node.premises)]
    live = [k for k, p in enumerate(pruned) if p is not None]
    if not live:
        return None

    layout = focus_layout(node.rule)
    present = [
        any(k == owner and cid in pruned[k][0].conclusion for cid, owner in zip(node.focus, layout)) for k in live
    ]
    if len(live) == 2 and not all(present):
        raise ExtractionError(
            f"{node.rule} at {list(addr)} joins two foci but one of them was pruned away before reaching it"
        )
    if not any(present):
        # the rule works on components the foci never reach
        return pruned[live[0]]

    premises = []
    origin: Origin = {(): addr}
    for k, p in enumerate(node.premises):
        if pruned[k] is None:
            premises.append(p)
            origin.update({(k,) + rel: v for rel, v in _whole(addr + (k,), p).items()})
        else:
            premises.append(pruned[k][0])
            origin.update({(k,) + rel: v for rel, v in pruned[k][1].items()})

    removed = [set() for _ in premises]
    for cid, owner in zip(node.focus, layout):
        removed[owner].add(cid)
    sides = [(c, s) for k, p in enumerate(premises) for c, s in p.conclusion if c not in removed[k]]
    principals = [(c, node.conclusion[c]) for c in node.principal_ids]
    return Derivation(
        node.rule,
        Hypersequent(tuple(sides) + tuple(principals)),
        tuple(premises),
        node.focus,
        node.principal,
        node.copies,
        node.pec,
    ), origin


def _check_profile(rule: EliminationRule) -> None:
    focus = Hypersequent(tuple(c for _, leaf in rule.derivation.open_leaves() for c in leaf.conclusion))
    root_l, root_r = eigen_profile(rule.conclusion)
    focus_l, focus_r = eigen_profile(focus)
    if root_l - focus_l != root_r - focus_r:
        raise InvariantViolation(
            "extraction",
            f"{rule.conclusion} does not balance its eigenvariables outside the foci {focus}",
        )


def extract_multi(
    tau_star: Derivation,
    foci: dict,
    entries: tuple[int, ...] = (),
    assert_lemmas: bool = False,
) -> EliminationRule:
    """Prune ``tau_star`` to the derivation fed by all ``foci`` together.

    The eigenvariables of the result balance outside the foci: every one
    that the foci do not account for occurs as often on the left as on the
    right. A result that does not is reported as an ``InvariantViolation``.

    :param tau_star: The labeled proof to cut the rule from.
    :type tau_star: Derivation
    :param foci: Node address to the component ids taken as focus there; the
        addresses must be pairwise parallel.
    :type foci: dict
    :param entries: Registry indexes the foci belong to, if any.
    :type entries: tuple[int, ...]
    :param assert_lemmas: Also check that the template keeps the tree order of
        the nodes it was cut from.
    :type assert_lemmas: bool
    :return: The elimination rule.
    :rtype: EliminationRule
    :raises ExtractionError: If the foci are missing, not parallel or pruned away
        before they meet.
    """
    addrs = [tuple(a) for a in foci]
    if not addrs:
        raise ExtractionError("no focus given")
    for i, h in enumerate(addrs):
        tau_star.node(h)
        for h2 in addrs[i + 1 :]:
            if not parallel(h, h2):
                raise ExtractionError(f"foci at {list(h)} and {list(h2)} lie on one thread")
    foci = {tuple(a): tuple(ids) for a, ids in foci.items()}
    for h, ids in foci.items():
        missing = [c for c in ids if c not in tau_star.node(h).conclusion]
        if missing:
            raise ExtractionError(f"components {missing} are not part of the node at {list(h)}")

    derivation, origin = _prune((), tau_star, foci)
    rule = EliminationRule(tuple(entries), foci, derivation, origin)
    _check_profile(rule)
    if assert_lemmas and not origin_monotone(rule):
        raise InvariantViolation("extraction", f"template of {list(foci)} does not keep the tree order of tau_star")
    log.trace("Extracted {} from {} foci", rule.conclusion, len(foci))
    return rule


def extract_single(
    tau_star: Derivation,
    h: NodeAddr,
    cids: tuple[int, ...],
    entries: tuple[int, ...] = (),
    assert_lemmas: bool = False,
) -> EliminationRule:
    return extract_multi(tau_star, {tuple(h): tuple(cids)}, entries, assert_lemmas)


def entry_template(
    tau_star: Derivation, registry: PecRegistry, indexes: list[int], assert_lemmas: bool = False
) -> EliminationRule:
    """The elimination rule of the focus components of registry entries.

    Several entries are extracted together only when each leads to every
    other one; see ``leads_to``.
    """
    foci = {}
    for i in indexes:
        entry = registry[i]
        if entry.degenerate:
            raise ExtractionError(f"entry {i} has no node to extract from")
        foci[entry.node] = (entry.focus,)
    for i, j in itertools.permutations(indexes, 2):
        if not leads_to(tau_star, registry, i, j):
            raise ExtractionError(f"entry {i} does not lead to entry {j}; they cannot share one template")
    return extract_multi(tau_star, foci, tuple(indexes), assert_lemmas)


def leads_to(tau_star: Derivation, registry: PecRegistry, i: int, j: int) -> bool:
    """True when the extraction of entry ``i`` still holds a copy of entry ``j``."""
    if registry[j].degenerate:
        return False
    root = entry_template(tau_star, registry, [i]).conclusion
    return any(c in root for c in registry[j].copies)


@dataclass(frozen=True)
class IntersectionNode:
    node: NodeAddr
    left: tuple[NodeAddr, ...]
    right: tuple[NodeAddr, ...]


def intersection_node(tau_star: Derivation, addrs: list[NodeAddr]) -> IntersectionNode:
    addrs = [tuple(a) for a in addrs]
    for a in addrs:
        tau_star.node(a)
    if len(addrs) == 1:
        return IntersectionNode(addrs[0], (addrs[0],), ())
    for i, h in enumerate(addrs):
        for h2 in addrs[i + 1 :]:
            if not parallel(h, h2):
                raise ExtractionError(f"{list(h)} and {list(h2)} are not parallel")
    node = common_ancestor(addrs)
    depth = len(node)
    left = tuple(a for a in addrs if a[depth] == 0)
    right = tuple(a for a in addrs if a[depth] == 1)
    return IntersectionNode(node, left, right)


def origin_monotone(rule: EliminationRule) -> bool:
    """Tree order of the template agrees with the order of the nodes it came from."""
    items = list(rule.origin.items())
    for a1, o1 in items:
        for a2, o2 in items:
            if below(a1, a2) != below(o1, o2):
                return False
    return True


def instantiate_elimination(
    rule: EliminationRule,
    targets: list[tuple[Derivation, tuple[int, ...]]],
    ids: IdSource,
    system: Optional[SystemId] = None,
) -> tuple[Derivation, dict[int, int]]:
    """Apply ``rule`` to copies of its foci.

    Each target is a derivation with the component ids of a copy of the
    matching focus in its conclusion; the rest of that conclusion is carried
    down as side components. Targets must not share ids. Returns the new
    derivation and, for every component the template adds at the root, the
    ``tau_star`` root component it was copied from.
    """
    leaves = rule.leaves
    if len(targets) != len(leaves):
        raise ExtractionError(f"rule has {len(leaves)} foci, got {len(targets)} targets")

    sigma: dict[int, int] = {}
    keep: dict[int, int] = {}
    plug: dict[NodeAddr, tuple[Derivation, list]] = {}
    for (leaf, _), (target, cids) in zip(leaves, targets):
        focus = rule.focus_of(leaf)
        found = find_copy_witness(focus, target.conclusion.restrict(cids), sigma)
        if found is None:
            raise CopyWitnessError(f"{target.conclusion.restrict(cids)} is not a copy of {focus}")
        sigma, comp_map = found
        keep.update(comp_map)
        plug[leaf] = (target, [(c, s) for c, s in target.conclusion if c not in cids])

    ids.reserve(max(sigma.values(), default=0), max(keep.values(), default=0))
    relabeled, comp_map, _ = refresh_ids(rule.derivation, ids, eigen=True, keep_components=keep, keep_eigens=sigma)

    def go(addr: NodeAddr, node: Derivation) -> tuple[Derivation, list]:
        if addr in plug:
            return plug[addr]
        if node.is_leaf:
            return node, []
        done = [go(addr + (i,), p) for i, p in enumerate(node.premises)]
        extra = [c for _, ctx in done for c in ctx]
        new = Derivation(
            node.rule,
            node.conclusion.plus(extra),
            tuple(d for d, _ in done),
            node.focus,
            node.principal,
            node.copies,
            node.pec,
        )
        if system is not None:
            check_node(system, new, addr, allow_open=True)
        return new, extra

    out, _ = go((), relabeled)
    origin = {comp_map[c]: c for c in rule.conclusion.ids}
    return out, origin
