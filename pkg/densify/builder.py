"""Smart constructors and tree surgery for annotated derivations.

Component ids follow one convention everywhere: leaves get fresh ids, side
components keep the id they had in their premise, principal components get
fresh ids, and the principal of EC reuses the id of the kept copy.
"""

from typing import Callable, Iterable, Optional
from dataclasses import replace
import itertools

from loguru import logger as log

from .calculus import (
    Derivation,
    NodeAddr,
    Principal,
    Rule,
    SystemId,
    check_node,
    focus_layout,
)
from .errors import AnnotationError, CopyWitnessError, RuleViolation, ShapeError
from .syntax import (
    Bin,
    Connective,
    Formula,
    Hypersequent,
    IdSource,
    Sequent,
    conj,
    disj,
    find_copy_witness,
    fusion,
    imp,
    T,
    F,
)


class DerivationBuilder:
    """Build checked-by-construction rule applications.

    The builder computes principal sequents from the focus sequents and the
    formulas named by the caller. It does not run the checker; callers that
    build from untrusted input should call ``check_proof`` on the result.
    """

    def __init__(self, ids: Optional[IdSource] = None):
        self.ids = ids or IdSource()

    # leaves

    def leaf(self, rule: Rule, sequent: Sequent) -> Derivation:
        return Derivation(rule, Hypersequent(((self.ids.component(), sequent),)))

    def axiom(self, a: Formula) -> Derivation:
        return self.leaf(Rule.ID, Sequent.of((a,), (a,)))

    def open(self, g: Hypersequent) -> Derivation:
        return Derivation(Rule.OPEN, g)

    # generic application

    def apply(
        self,
        rule: Rule,
        premises: list[Derivation],
        focus: tuple[int, ...],
        principals: list[Sequent],
        ns: Optional[tuple[int, ...]] = None,
        kept_id: Optional[int] = None,
        pids: Optional[list[int]] = None,
    ) -> Derivation:
        owners = [0, 0] if rule in (Rule.EC, Rule.D) else list(range(len(focus)))
        removed: list[set[int]] = [set() for _ in premises]
        for cid, k in zip(focus, owners):
            if cid not in premises[k].conclusion:
                raise ShapeError(f"focus {cid} is not a component of premise {k}")
            removed[k].add(cid)
        sides = [(c, s) for k, p in enumerate(premises) for c, s in p.conclusion if c not in removed[k]]
        if pids is None:
            pids = [kept_id] if kept_id is not None else [self.ids.component() for _ in principals]
        ns = ns or tuple(0 for _ in principals)
        conclusion = Hypersequent(tuple(sides) + tuple(zip(pids, principals)))
        return Derivation(
            rule,
            conclusion,
            tuple(premises),
            tuple(focus),
            tuple(Principal(c, n) for c, n in zip(pids, ns)),
        )

    def one(self, rule: Rule, d: Derivation, cid: int, principal: Sequent) -> Derivation:
        return self.apply(rule, [d], (cid,), [principal])

    # one-premise logical and structural rules

    def t_l(self, d: Derivation, cid: int) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.T_L, d, cid, Sequent(f.left + [T], f.right))

    def f_r(self, d: Derivation, cid: int) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.F_R, d, cid, Sequent(f.left, f.right + [F]))

    def imp_r(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.IMP_R, d, cid, Sequent(f.left - [a], f.right - [b] + [imp(a, b)]))

    def fus_l(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.FUS_L, d, cid, Sequent(f.left - [a, b] + [fusion(a, b)], f.right))

    def and_lr(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.AND_LR, d, cid, Sequent(f.left - [a] + [conj(a, b)], f.right))

    def and_ll(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.AND_LL, d, cid, Sequent(f.left - [b] + [conj(a, b)], f.right))

    def or_rr(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.OR_RR, d, cid, Sequent(f.left, f.right - [a] + [disj(a, b)]))

    def or_rl(self, d: Derivation, cid: int, a: Formula, b: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.OR_RL, d, cid, Sequent(f.left, f.right - [b] + [disj(a, b)]))

    def wl(self, d: Derivation, cid: int, a: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.WL, d, cid, Sequent(f.left + [a], f.right))

    def wr(self, d: Derivation, cid: int, a: Formula) -> Derivation:
        f = d.conclusion[cid]
        return self.one(Rule.WR, d, cid, Sequent(f.left, f.right + [a]))

    # two-premise rules (multiplicative side hypersequents)

    def imp_l(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        p = Sequent(f0.left + (f1.left - [b]) + [imp(a, b)], (f0.right - [a]) + f1.right)
        return self.apply(Rule.IMP_L, [d0, d1], (c0, c1), [p])

    def fus_r(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        p = Sequent(f0.left + f1.left, (f0.right - [a]) + (f1.right - [b]) + [fusion(a, b)])
        return self.apply(Rule.FUS_R, [d0, d1], (c0, c1), [p])

    def and_r(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0 = d0.conclusion[c0]
        p = Sequent(f0.left, f0.right - [a] + [conj(a, b)])
        return self.apply(Rule.AND_R, [d0, d1], (c0, c1), [p])

    def or_l(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0 = d0.conclusion[c0]
        p = Sequent(f0.left - [a] + [disj(a, b)], f0.right)
        return self.apply(Rule.OR_L, [d0, d1], (c0, c1), [p])

    def and_rw(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        c = conj(a, b)
        p1 = Sequent(f0.left, f0.right - [a] + [c])
        p2 = Sequent(f1.left, f1.right - [b] + [c])
        return self.apply(Rule.AND_RW, [d0, d1], (c0, c1), [p1, p2], ns=(1, 2))

    def or_lw(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula, b: Formula) -> Derivation:
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        c = disj(a, b)
        p1 = Sequent(f0.left - [a] + [c], f0.right)
        p2 = Sequent(f1.left - [b] + [c], f1.right)
        return self.apply(Rule.OR_LW, [d0, d1], (c0, c1), [p1, p2], ns=(1, 2))

    def com(self, d0: Derivation, c0: int, d1: Derivation, c1: int, first: Sequent) -> Derivation:
        """COM whose first principal is ``first``; the second gets the remaining formulas."""
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        left, right = f0.left + f1.left, f0.right + f1.right
        if not (first.left <= left and first.right <= right):
            raise ShapeError(f"{first} is not a part of {f0} and {f1}")
        second = Sequent(left - first.left, right - first.right)
        return self.apply(Rule.COM, [d0, d1], (c0, c1), [first, second], ns=(1, 2))

    def cut(self, d0: Derivation, c0: int, d1: Derivation, c1: int, a: Formula) -> Derivation:
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        if a in f0.left and a in f1.right:
            p = Sequent((f0.left - [a]) + f1.left, f0.right + (f1.right - [a]))
        elif a in f0.right and a in f1.left:
            p = Sequent(f0.left + (f1.left - [a]), (f0.right - [a]) + f1.right)
        else:
            raise ShapeError(f"cut formula {a} does not occur on opposite sides of {f0} and {f1}")
        return self.apply(Rule.CUT, [d0, d1], (c0, c1), [p])

    def density(self, d: Derivation, c0: int, c1: int, var: Formula) -> Derivation:
        f0, f1 = d.conclusion[c0], d.conclusion[c1]
        p = Sequent((f0.left - [var]) + f1.left, f0.right + (f1.right - [var]))
        return self.apply(Rule.D, [d], (c0, c1), [p])

    # external structural rules

    def ec(self, d: Derivation, kept: int, removed: int) -> Derivation:
        return self.apply(Rule.EC, [d], (kept, removed), [d.conclusion[kept]], kept_id=kept)

    def ew(self, d: Derivation, s: Sequent) -> Derivation:
        return self.apply(Rule.EW, [d], (), [s])

    def ew_all(self, d: Derivation, sequents: Iterable[Sequent]) -> Derivation:
        for s in sequents:
            d = self.ew(d, s)
        return d

    def id_omega(self, d: Derivation, pec: tuple[int, ...] = ()) -> Derivation:
        return Derivation(Rule.ID_OMEGA, d.conclusion, (d,), pec=tuple(pec))

    def ec_omega(self, d: Derivation, copies: list[tuple[Iterable[int], Iterable[int]]], star: bool = True) -> Derivation:
        copies = tuple((tuple(sorted(k)), tuple(sorted(r))) for k, r in copies)
        removed = {c for _, r in copies for c in r}
        rule = Rule.EC_OMEGA_STAR if star else Rule.EC_OMEGA
        return Derivation(rule, d.conclusion.without(removed), (d,), copies=copies)


# ------------------------------------------------------------------- relabeling


def relabel_derivation(d: Derivation, eigen_map: dict[int, int], comp_map: dict[int, int]) -> Derivation:
    """Rename eigen ids and component ids throughout ``d``; unmapped ids stay."""

    def cm(c: int) -> int:
        return comp_map.get(c, c)

    def go(node: Derivation) -> Derivation:
        return Derivation(
            node.rule,
            node.conclusion.rename(eigen_map).reindex(comp_map),
            tuple(go(p) for p in node.premises),
            tuple(cm(c) for c in node.focus),
            tuple(Principal(cm(p.cid), p.n) for p in node.principal),
            tuple((tuple(cm(c) for c in k), tuple(cm(c) for c in r)) for k, r in node.copies),
            tuple(cm(c) for c in node.pec),
        )

    return go(d)


def component_ids(d: Derivation) -> set[int]:
    out: set[int] = set()
    for _, node in d.walk():
        out.update(node.conclusion.ids)
    return out


def eigen_ids(d: Derivation) -> set[int]:
    out: set[int] = set()
    for _, node in d.walk():
        out |= node.conclusion.eigen_ids()
    return out


def refresh_ids(
    d: Derivation,
    ids: IdSource,
    eigen: bool = False,
    keep_components: dict[int, int] | None = None,
    keep_eigens: dict[int, int] | None = None,
) -> tuple[Derivation, dict[int, int], dict[int, int]]:
    """Give every component (and optionally every eigen id) a fresh number.

    ``keep_components`` / ``keep_eigens`` pin part of the renaming; the
    remaining ids are allocated from ``ids`` in increasing order.
    """
    comp_map = dict(keep_components or {})
    for c in sorted(component_ids(d)):
        if c not in comp_map:
            comp_map[c] = ids.component()
    eigen_map = dict(keep_eigens or {})
    if eigen:
        for k in sorted(eigen_ids(d)):
            if k not in eigen_map:
                eigen_map[k] = ids.eigen()
    return relabel_derivation(d, eigen_map, comp_map), comp_map, eigen_map


def replace_open(d: Derivation, provider: Callable[[NodeAddr, Derivation], Optional[Derivation]]) -> Derivation:
    """Replace OPEN leaves by the derivations ``provider`` returns (None keeps the leaf)."""

    def go(addr: NodeAddr, node: Derivation) -> Derivation:
        if node.rule is Rule.OPEN:
            new = provider(addr, node)
            if new is None:
                return node
            if new.conclusion != node.conclusion:
                raise ShapeError(f"graft at {list(addr)} concludes {new.conclusion}, expected {node.conclusion}")
            return new
        if not node.premises:
            return node
        return replace(node, premises=tuple(go(addr + (i,), p) for i, p in enumerate(node.premises)))

    return go((), d)


def graft_copy(base: Derivation, target: Hypersequent, ids: IdSource) -> Derivation:
    """Relabel ``base`` so that it concludes exactly ``target``.

    ``target`` must be ``base.conclusion`` up to a renaming of eigen ids and
    component ids. Ids internal to ``base`` are replaced by fresh ones.
    """
    if base.conclusion == target:
        return base
    found = find_copy_witness(base.conclusion, target)
    if found is None:
        raise CopyWitnessError(f"{target} is not a renaming of {base.conclusion}")
    sigma, comp_map = found
    relabeled, _, _ = refresh_ids(base, ids, eigen=True, keep_components=comp_map, keep_eigens=sigma)
    if relabeled.conclusion != target:
        raise CopyWitnessError(f"relabeling did not reach {target}")
    return relabeled


def graft_onto(d: Derivation, base: Derivation, ids: IdSource) -> Derivation:
    """Close every OPEN leaf of ``d`` with a relabeled copy of ``base``."""
    return replace_open(d, lambda _addr, leaf: graft_copy(base, leaf.conclusion, ids))


# -------------------------------------------------------- generalized rules away


def expand_generalized(d: Derivation, ids: IdSource) -> Derivation:
    """Rewrite every and_rw / or_lw into COM, and_r / or_l and two cuts."""
    ids.reserve(max(eigen_ids(d), default=0), max(component_ids(d), default=0))
    b = DerivationBuilder(ids)

    def go(node: Derivation) -> Derivation:
        if not node.premises:
            return node
        premises = tuple(go(p) for p in node.premises)
        if node.rule not in (Rule.AND_RW, Rule.OR_LW):
            return replace(node, premises=premises)
        d0, d1 = premises
        c0, c1 = node.focus
        p1, p2 = sorted(node.principal, key=lambda p: p.n)
        a, bb = _generalized_formula(node, node.conclusion[p1.cid], d0.conclusion[c0])
        xa, xb = b.axiom(a), b.axiom(bb)
        ia, ib = xa.conclusion.ids[0], xb.conclusion.ids[0]
        if node.rule is Rule.AND_RW:
            swapped = b.com(xa, ia, xb, ib, Sequent.of((a,), (bb,)))
            ab = swapped.principal_ids[0]
            ba = swapped.principal_ids[1]
            left_ax = b.axiom(a)
            g1 = b.and_r(left_ax, left_ax.conclusion.ids[0], swapped, ab, a, bb)
            right_ax = b.axiom(bb)
            g2 = b.and_r(g1, ba, right_ax, right_ax.conclusion.ids[0], a, bb)
            up_a = g1.principal_ids[0]
            up_b = g2.principal_ids[0]
        else:
            swapped = b.com(xa, ia, xb, ib, Sequent.of((bb,), (a,)))
            ba = swapped.principal_ids[0]
            ab = swapped.principal_ids[1]
            left_ax = b.axiom(a)
            g1 = b.or_l(left_ax, left_ax.conclusion.ids[0], swapped, ba, a, bb)
            right_ax = b.axiom(bb)
            g2 = b.or_l(g1, ab, right_ax, right_ax.conclusion.ids[0], a, bb)
            up_a = g1.principal_ids[0]
            up_b = g2.principal_ids[0]
        first = b.cut(d0, c0, g2, up_a, a)
        second = b.cut(d1, c1, first, up_b, bb)
        fresh_a = first.principal_ids[0]
        fresh_b = second.principal_ids[0]
        log.trace("Expanded {} into COM and two cuts", node.rule)
        return relabel_derivation(second, {}, {fresh_a: p1.cid, fresh_b: p2.cid})

    return go(d)


def _generalized_formula(node: Derivation, wide: Sequent, f0: Sequent) -> tuple[Formula, Formula]:
    """The two immediate subformulas of the principal formula of and_rw / or_lw."""
    if node.rule is Rule.AND_RW:
        for c in wide.right.distinct():
            if isinstance(c, Bin) and c.op is Connective.AND and wide.right - [c] + [c.left] == f0.right:
                return c.left, c.right
    else:
        for c in wide.left.distinct():
            if isinstance(c, Bin) and c.op is Connective.OR and wide.left - [c] + [c.left] == f0.left:
                return c.left, c.right
    raise ShapeError(f"no principal formula for {node.rule} in {wide}")


# -------------------------------------------------------------------- annotator


def _signature(rule: Rule, node: Derivation) -> tuple:
    focus = []
    owners = [0, 0] if rule in (Rule.EC, Rule.D) else list(range(len(node.focus)))
    for cid, k in zip(node.focus, owners):
        focus.append(node.premises[k].conclusion[cid].key())
    if rule is Rule.COM:
        # the two principal components of COM are interchangeable
        principals = sorted((node.conclusion[p.cid].key(), 0) for p in node.principal)
    else:
        principals = [(node.conclusion[p.cid].key(), p.n) for p in node.principal]
    if rule is Rule.EC:
        focus.sort()
    return tuple(focus), tuple(principals)


def _candidates(rule: Rule, node: Derivation) -> Iterable[tuple[tuple, tuple]]:
    premises = [p.conclusion for p in node.premises]

    def distinct_ids(g: Hypersequent) -> list[int]:
        seen, out = set(), []
        for c, s in g:
            if s not in seen:
                seen.add(s)
                out.append(c)
        return out

    if rule is Rule.EC:
        g = premises[0]
        focus_options = [
            (a, b) for a, b in itertools.permutations(g.ids, 2) if g[a] == g[b] and a < b
        ]
    elif rule is Rule.D:
        focus_options = list(itertools.permutations(premises[0].ids, 2))
    elif rule in (Rule.EW, Rule.ID_OMEGA):
        focus_options = [()]
    else:
        focus_options = list(itertools.product(*(distinct_ids(g) for g in premises)))

    if rule is Rule.ID_OMEGA:
        principal_options = [()]
    elif rule.two_principals:
        principal_options = [
            (Principal(a, 1), Principal(b, 2)) for a, b in itertools.permutations(node.conclusion.ids, 2)
        ]
    else:
        principal_options = [(Principal(c, 0),) for c in distinct_ids(node.conclusion)]

    for focus in focus_options:
        for principal in principal_options:
            yield tuple(focus), principal


def annotate(system: SystemId, d: Derivation) -> Derivation:
    """Infer missing focus/principal annotations.

    Nodes that already carry annotations are kept. A node without them is
    tried against every choice of focus and principal components; exactly one
    reading (up to equal sequents) must pass the checker.
    """

    def go(addr: NodeAddr, node: Derivation) -> Derivation:
        premises = tuple(go(addr + (i,), p) for i, p in enumerate(node.premises))
        node = replace(node, premises=premises)
        if node.rule.is_leaf or node.rule in (Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
            return node
        if node.focus or node.principal or node.rule is Rule.ID_OMEGA:
            return node
        readings: dict[tuple, Derivation] = {}
        for focus, principal in _candidates(node.rule, node):
            trial = replace(node, focus=focus, principal=principal)
            try:
                check_node(system, trial, addr, allow_open=True)
            except (RuleViolation, ShapeError, KeyError):
                continue
            readings.setdefault(_signature(node.rule, trial), trial)
        if not readings:
            raise AnnotationError(f"no reading of {node.rule} at {list(addr)} passes the checker")
        if len(readings) > 1:
            raise AnnotationError(f"{len(readings)} readings of {node.rule} at {list(addr)}")
        return next(iter(readings.values()))

    return go((), d)


# ----------------------------------------------------------------- id hygiene


def map_sequents(d: Derivation, fn: Callable[[Sequent], Sequent]) -> Derivation:
    """Apply ``fn`` to every sequent of every node, keeping ids and annotations."""

    def go(node: Derivation) -> Derivation:
        conclusion = Hypersequent(tuple((c, fn(s)) for c, s in node.conclusion))
        return replace(node, conclusion=conclusion, premises=tuple(go(p) for p in node.premises))

    return go(d)


def strip_labels(d: Derivation) -> Derivation:
    """Forget eigenvariable ids (every ``p_k`` becomes plain ``p``)."""
    return map_sequents(d, lambda s: s.rename({k: 0 for k in s.v_left() + s.v_right()}))


def normalize_ids(d: Derivation, ids: IdSource) -> Derivation:
    """Renumber components so ids follow the builder convention.

    Hand-written proofs may reuse ids freely between nodes. Afterwards every
    id is born exactly once (at a leaf or as a principal component) and is
    kept by side components down to where it is consumed.
    """

    def go(node: Derivation) -> tuple[Derivation, dict[int, int]]:
        if not node.premises:
            fresh = {c: ids.component() for c in node.conclusion.ids}
            return replace(node, conclusion=node.conclusion.reindex(fresh)), fresh
        done = [go(p) for p in node.premises]
        premises = tuple(p for p, _ in done)
        maps = [m for _, m in done]
        layout = focus_layout(node.rule)
        focus = tuple(maps[k][c] for c, k in zip(node.focus, layout))
        used = [set() for _ in premises]
        for c, k in zip(focus, layout):
            used[k].add(c)
        if node.rule in (Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
            for _, removed in node.copies:
                used[0].update(maps[0][c] for c in removed)
        pool: list[tuple[int, int, Sequent]] = [
            (k, c, s) for k, p in enumerate(premises) for c, s in p.conclusion if c not in used[k]
        ]
        old_of = {(k, new): old for k, m in enumerate(maps) for old, new in m.items()}
        pids = set(node.principal_ids)
        mapping: dict[int, int] = {}
        for c, s in node.conclusion:
            if c in pids:
                continue
            candidates = [i for i, (_, _, t) in enumerate(pool) if t == s]
            if not candidates:
                raise ShapeError(f"side component {s} of {node.rule} has no source in its premises")
            preferred = [i for i in candidates if old_of.get((pool[i][0], pool[i][1])) == c]
            k, new, _ = pool.pop((preferred or candidates)[0])
            mapping[c] = new
        for p in node.principal:
            if node.rule is Rule.EC:
                mapping[p.cid] = focus[0]
            else:
                mapping[p.cid] = ids.component()
        conclusion = node.conclusion.reindex(mapping)
        return (
            Derivation(
                node.rule,
                conclusion,
                premises,
                focus,
                tuple(Principal(mapping[p.cid], p.n) for p in node.principal),
                tuple((tuple(maps[0][c] for c in k), tuple(maps[0][c] for c in r)) for k, r in node.copies),
                tuple(maps[0][c] for c in node.pec if c in maps[0]),
            ),
            mapping,
        )

    return go(d)[0]
