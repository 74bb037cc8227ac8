"""Closures, the generalized density rule and the translation of labeled proofs.

A closure of a component is the least closed part of a labeled hypersequent
that contains it. The generalized density rule collapses every closure into
one p-free sequent; :func:`translate_proof` turns a labeled proof of ``G``
into a proof of that collapse of ``G`` in the base calculus.
"""

from typing import Optional
from dataclasses import dataclass, field

from loguru import logger as log

from .builder import DerivationBuilder, component_ids, eigen_ids
from .calculus import OMEGA_FORBIDDEN, Derivation, NodeAddr, Rule, focus_layout
from .errors import InvariantViolation, NotClosedError, PipelineError
from .syntax import (
    T,
    Hypersequent,
    IdSource,
    Sequent,
    closure_members,
    closure_partition_ids,
    eigen_profile,
    find_copy_witness,
    is_closed,
)


@dataclass(frozen=True)
class Closure:
    """The closure of ``seed``; ``members`` are in discovery order."""

    seed: int
    members: tuple[int, ...]
    t_count: int

    @property
    def cid(self) -> int:
        """Component id the collapsed sequent is stored under."""
        return min(self.members)

    def __contains__(self, cid: int) -> bool:
        return cid in self.members


def closure(g: Hypersequent, seed: int) -> Closure:
    if not is_closed(g):
        raise NotClosedError(f"closures are taken in closed hypersequents, not in {g}")
    members = closure_members(g, seed)
    v_l, _ = eigen_profile(g.restrict(members))
    return Closure(seed, members, len(v_l) - len(members) + 1)


def closure_partition(g: Hypersequent) -> list[Closure]:
    if not is_closed(g):
        raise NotClosedError(f"closures are taken in closed hypersequents, not in {g}")
    return [closure(g, part[0]) for part in closure_partition_ids(g)]


def closure_of(closures: list[Closure], cid: int) -> Closure:
    for c in closures:
        if cid in c:
            return c
    raise KeyError(cid)


def collapse(g: Hypersequent, c: Closure) -> Sequent:
    """The p-free sequent the density rule makes of one closure."""
    left = [a for m in c.members for a in g[m].strip_eigens().left]
    right = [a for m in c.members for a in g[m].strip_eigens().right]
    return Sequent.of(left, [T] * c.t_count + right)


def d_rule(g: Hypersequent) -> Hypersequent:
    """Apply the generalized density rule to a closed hypersequent."""
    return Hypersequent(tuple((c.cid, collapse(g, c)) for c in closure_partition(g)))


@dataclass
class CaseNote:
    """How one node of a labeled proof was translated."""

    addr: NodeAddr
    rule: str
    case: str
    expected_t: Optional[int] = None
    actual_t: Optional[int] = None

    @property
    def consistent(self) -> bool:
        return self.expected_t is None or self.expected_t == self.actual_t


@dataclass
class ProofTranslator:
    """Translate a labeled proof bottom-up, one rule at a time.

    Every translated node concludes exactly ``d_rule`` of the original node,
    component ids included.
    """

    ids: IdSource = field(default_factory=IdSource)
    notes: list[CaseNote] = field(default_factory=list)

    def __post_init__(self):
        self.b = DerivationBuilder(self.ids)

    def translate(self, d: Derivation) -> Derivation:
        self.ids.reserve(max(eigen_ids(d), default=0), max(component_ids(d), default=0))
        out = self._go((), d)
        log.debug("Translated a labeled proof of size {} into one of size {}", d.size, out.size)
        return out

    def _go(self, addr: NodeAddr, node: Derivation) -> Derivation:
        rule = node.rule
        if rule in OMEGA_FORBIDDEN:
            raise PipelineError("translation", f"{rule} at {list(addr)} is not a rule of the labeled calculus")
        target = d_rule(node.conclusion)
        if rule is Rule.OPEN:
            return Derivation(Rule.OPEN, target)
        if rule.is_leaf:
            if node.conclusion.has_eigen():
                return Derivation(Rule.T_R, target)
            return node
        if rule is Rule.ID_OMEGA:
            return self._go(addr + (0,), node.premises[0])

        done = [self._go(addr + (i,), p) for i, p in enumerate(node.premises)]
        if rule in (Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
            out = self._contract(node, done[0])
        elif rule.arity == 1:
            out = self._one_premise(node, done[0], target)
        else:
            out = self._two_premise(addr, node, done, target)
        if out.conclusion != target:
            raise InvariantViolation("translation", f"{rule} at {list(addr)} gave {out.conclusion}, expected {target}")
        return out

    def _focus_closures(self, node: Derivation) -> list[Closure]:
        out = []
        for cid, k in zip(node.focus, focus_layout(node.rule)):
            out.append(closure(node.premises[k].conclusion, cid))
        return out

    def _one_premise(self, node: Derivation, sub: Derivation, target: Hypersequent) -> Derivation:
        (focus,) = self._focus_closures(node)
        principal = closure(node.conclusion, node.principal[0].cid)
        return self.b.apply(node.rule, [sub], (focus.cid,), [target[principal.cid]], pids=[principal.cid])

    def _two_premise(self, addr: NodeAddr, node: Derivation, done: list[Derivation], target: Hypersequent) -> Derivation:
        c0, c1 = self._focus_closures(node)
        closures = closure_partition(node.conclusion)
        ordered = sorted(node.principal, key=lambda p: p.n)
        owners = [closure_of(closures, p.cid) for p in ordered]
        if node.rule is Rule.COM and owners[0] == owners[1]:
            return self._merged_com(addr, done, c0, c1, owners[0], target)
        pids = [c.cid for c in owners]
        ns = tuple(p.n for p in ordered)
        if node.rule in (Rule.IMP_L, Rule.FUS_R):
            self.notes.append(CaseNote(addr, node.rule.value, "joined", c0.t_count + c1.t_count, owners[0].t_count))
        elif node.rule is Rule.COM:
            self.notes.append(CaseNote(addr, node.rule.value, "split", c0.t_count + c1.t_count, sum(c.t_count for c in owners)))
        return self.b.apply(node.rule, done, (c0.cid, c1.cid), [target[c] for c in pids], ns=ns, pids=pids)

    def _merged_com(
        self,
        addr: NodeAddr,
        done: list[Derivation],
        c0: Closure,
        c1: Closure,
        merged: Closure,
        target: Hypersequent,
    ) -> Derivation:
        # one spare t is cut away; the side that has one provides it
        if c0.t_count >= 1:
            provider, p_id, receiver, r_id = done[0], c0.cid, done[1], c1.cid
        elif c1.t_count >= 1:
            provider, p_id, receiver, r_id = done[1], c1.cid, done[0], c0.cid
        else:
            raise InvariantViolation("translation", f"COM at {list(addr)} merges two closures without a spare t")
        self.notes.append(CaseNote(addr, Rule.COM.value, "merged", c0.t_count + c1.t_count - 1, merged.t_count))
        with_t = self.b.t_l(receiver, r_id)
        return self.b.apply(
            Rule.CUT,
            [provider, with_t],
            (p_id, with_t.principal_ids[0]),
            [target[merged.cid]],
            pids=[merged.cid],
        )

    def _contract(self, node: Derivation, sub: Derivation) -> Derivation:
        premise = node.premises[0].conclusion
        closures = closure_partition(premise)
        out = sub
        for kept, removed in node.copies:
            found = find_copy_witness(premise.restrict(kept), premise.restrict(removed))
            if found is None:
                raise InvariantViolation("translation", f"{premise.restrict(removed)} is no copy of {premise.restrict(kept)}")
            _, comp_map = found
            for c in closures:
                if c.seed not in kept:
                    continue
                partner = closure_of(closures, comp_map[c.seed])
                out = self.b.ec(out, c.cid, partner.cid)
        return out


def translate_proof(d: Derivation, ids: Optional[IdSource] = None) -> Derivation:
    """A base-calculus proof of ``d_rule(d.conclusion)`` from a labeled proof ``d``."""
    return ProofTranslator(ids or IdSource()).translate(d)
