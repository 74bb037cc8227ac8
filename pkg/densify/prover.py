"""Bounded backward search for cut-free proofs.

The search is relevance driven: a backward step on a component returns a
derivation of some sub-multiset of its goal, and a premise derivation that
never used the new focus is passed down unchanged. Two-premise rules give
both premises the whole side context; components that both premise
derivations kept are contracted with EC below the rule. ``prove`` finally
weakens in whatever the derivation did not use.

Depth is iteratively deepened up to ``SearchBudget.max_depth``; failures are
memoised per ``(goal multiset, depth, contractions left)``.
"""

from typing import Iterator, Optional
import itertools

import inflect
from loguru import logger as log

from .builder import DerivationBuilder, relabel_derivation
from .calculus import Derivation, Rule, SystemId, check_proof
from .config import SearchBudget
from .syntax import (
    BOT,
    F,
    T,
    TOP,
    Bag,
    Bin,
    Connective,
    Hypersequent,
    IdSource,
    Sequent,
)

_p = inflect.engine()


def _pluralise(word: str, n: int) -> str:
    return f"{n} {_p.plural(word, n)}"


def _splits(bag: Bag) -> Iterator[tuple[Bag, Bag]]:
    """All ways to split a multiset into two parts (distinct multisets only)."""
    kinds = bag.distinct()
    counts = [bag.count(a) for a in kinds]
    for choice in itertools.product(*(range(n + 1) for n in counts)):
        first = [a for a, k in zip(kinds, choice) for _ in range(k)]
        yield Bag(tuple(first)), bag - first


def _binaries(bag: Bag, op: Connective) -> list[Bin]:
    return [a for a in bag.distinct() if isinstance(a, Bin) and a.op is op]


class _Search:
    def __init__(self, system: SystemId, budget: SearchBudget, ids: IdSource):
        self.system = system
        self.budget = budget
        self.ids = ids
        self.b = DerivationBuilder(ids)
        self.failed: set[tuple] = set()
        self.steps = 0

    # -- helpers

    def fits(self, s: Sequent) -> bool:
        return not self.system.single_conclusion or s.single_conclusion

    def admits(self, goal: Hypersequent) -> bool:
        """Every component of ``goal`` may occur in a proof of the system."""
        return all(self.fits(s) for s in goal.sequents)

    def premise_goal(self, goal: Hypersequent, drop: tuple[int, ...], new: list[Sequent]) -> tuple[Hypersequent, list[int]]:
        xs = [self.ids.component() for _ in new]
        return goal.without(drop).plus(zip(xs, new)), xs

    # -- entry points

    def derive(self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset) -> Iterator[Derivation]:
        key = (goal.multiset_key(), depth, ec_left)
        if key in self.failed:
            return
        if not self.admits(goal):
            return
        if goal.multiset_key() in path:
            return
        self.steps += 1
        found = False
        for d in self._moves(goal, depth, ec_left, path | {goal.multiset_key()}):
            found = True
            yield d
        if not found:
            self.failed.add(key)

    def _moves(self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset) -> Iterator[Derivation]:
        yield from self._axioms(goal)
        if depth == 0:
            return
        invertible = self._invertible(goal)
        if invertible is not None:
            yield from self._one_premise(goal, depth, ec_left, path, *invertible)
            return
        yield from self._branching(goal, depth, ec_left, path)
        for move in self._non_invertible(goal):
            yield from self._one_premise(goal, depth, ec_left, path, *move)
        yield from self._communication(goal, depth, ec_left, path)
        if ec_left > 0:
            yield from self._contraction(goal, depth, ec_left, path)
        if self.system.weakening:
            for move in self._weakenings(goal):
                yield from self._one_premise(goal, depth, ec_left, path, *move)

    # -- leaves

    def _axioms(self, goal: Hypersequent) -> Iterator[Derivation]:
        for cid, s in goal:
            single = Hypersequent(((cid, s),))
            if len(s.left) == 1 and s.left == s.right:
                yield Derivation(Rule.ID, single)
            elif TOP in s.right:
                yield Derivation(Rule.TOP_R, single)
            elif BOT in s.left:
                yield Derivation(Rule.BOT_L, single)
            elif s == Sequent.of((), (T,)):
                yield Derivation(Rule.T_R, single)
            elif s == Sequent.of((F,), ()):
                yield Derivation(Rule.F_L, single)
            elif self.system.weakening:
                weakened = self._weakened_axiom(cid, s)
                if weakened is not None:
                    yield weakened

    def _weakened_axiom(self, cid: int, s: Sequent) -> Optional[Derivation]:
        """An initial sequent inside ``s`` followed by WL/WR up to ``s``."""
        cores = [Sequent.of((a,), (a,)) for a in s.left.distinct() if a in s.right]
        if F in s.left:
            cores.append(Sequent.of((F,), ()))
        if T in s.right:
            cores.append(Sequent.of((), (T,)))
        if not cores:
            return None
        core = cores[0]
        rule = Rule.ID if len(core.left) == 1 and core.left == core.right else Rule.F_L if core.left else Rule.T_R
        steps = [(Rule.WL, x) for x in s.left - core.left] + [(Rule.WR, x) for x in s.right - core.right]
        d = Derivation(rule, Hypersequent(((self.ids.component(), core),)))
        cur = d.conclusion.ids[0]
        for k, (weakening, x) in enumerate(steps):
            f = d.conclusion[cur]
            principal = Sequent(f.left + [x], f.right) if weakening is Rule.WL else Sequent(f.left, f.right + [x])
            pid = cid if k == len(steps) - 1 else self.ids.component()
            d = self.b.apply(weakening, [d], (cur,), [principal], pids=[pid])
            cur = pid
        return d

    # -- one-premise rules

    def _invertible(self, goal: Hypersequent) -> Optional[tuple]:
        for cid, s in goal:
            if T in s.left:
                return (cid, Rule.T_L, Sequent(s.left - [T], s.right))
            if F in s.right:
                return (cid, Rule.F_R, Sequent(s.left, s.right - [F]))
            for c in _binaries(s.right, Connective.IMP):
                return (cid, Rule.IMP_R, Sequent(s.left + [c.left], s.right - [c] + [c.right]))
            for c in _binaries(s.left, Connective.FUSION):
                return (cid, Rule.FUS_L, Sequent(s.left - [c] + [c.left, c.right], s.right))
        return None

    def _non_invertible(self, goal: Hypersequent) -> Iterator[tuple]:
        for cid, s in goal:
            for c in _binaries(s.left, Connective.AND):
                yield (cid, Rule.AND_LR, Sequent(s.left - [c] + [c.left], s.right))
                yield (cid, Rule.AND_LL, Sequent(s.left - [c] + [c.right], s.right))
            for c in _binaries(s.right, Connective.OR):
                yield (cid, Rule.OR_RR, Sequent(s.left, s.right - [c] + [c.left]))
                yield (cid, Rule.OR_RL, Sequent(s.left, s.right - [c] + [c.right]))

    def _weakenings(self, goal: Hypersequent) -> Iterator[tuple]:
        for cid, s in goal:
            for a in s.left.distinct():
                yield (cid, Rule.WL, Sequent(s.left - [a], s.right))
            for a in s.right.distinct():
                yield (cid, Rule.WR, Sequent(s.left, s.right - [a]))

    def _one_premise(
        self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset, cid: int, rule: Rule, premise: Sequent
    ) -> Iterator[Derivation]:
        if not self.fits(premise):
            return
        sub_goal, (x,) = self.premise_goal(goal, (cid,), [premise])
        log.trace("Backward {} on {} at depth {}", rule, goal[cid], depth)
        for sub in self.derive(sub_goal, depth - 1, ec_left, path):
            if x not in sub.conclusion:
                yield sub
            else:
                yield self.b.apply(rule, [sub], (x,), [goal[cid]], pids=[cid])

    # -- two-premise rules

    def _branching(self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset) -> Iterator[Derivation]:
        for cid, s in goal:
            for c in _binaries(s.right, Connective.AND):
                rest = s.right - [c]
                yield from self._two_premise(
                    goal, depth, ec_left, path, Rule.AND_R, (cid,),
                    Sequent(s.left, rest + [c.left]), Sequent(s.left, rest + [c.right]),
                )
            for c in _binaries(s.left, Connective.OR):
                rest = s.left - [c]
                yield from self._two_premise(
                    goal, depth, ec_left, path, Rule.OR_L, (cid,),
                    Sequent(rest + [c.left], s.right), Sequent(rest + [c.right], s.right),
                )
            for c in _binaries(s.right, Connective.FUSION):
                for n, ((l1, l2), (r1, r2)) in enumerate(itertools.product(_splits(s.left), _splits(s.right - [c]))):
                    if n >= self.budget.max_com_splits:
                        break
                    yield from self._two_premise(
                        goal, depth, ec_left, path, Rule.FUS_R, (cid,),
                        Sequent(l1, r1 + [c.left]), Sequent(l2, r2 + [c.right]),
                    )
            for c in _binaries(s.left, Connective.IMP):
                for n, ((l1, l2), (r1, r2)) in enumerate(itertools.product(_splits(s.left - [c]), _splits(s.right))):
                    if n >= self.budget.max_com_splits:
                        break
                    yield from self._two_premise(
                        goal, depth, ec_left, path, Rule.IMP_L, (cid,),
                        Sequent(l1, r1 + [c.left]), Sequent(l2 + [c.right], r2),
                    )

    def _communication(self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset) -> Iterator[Derivation]:
        for (c1, s1), (c2, s2) in itertools.combinations(list(goal), 2):
            tried = 0
            seen: set[tuple] = set()
            for (a1, a2), (b1, b2), (x1, x2), (y1, y2) in itertools.product(
                _splits(s1.left), _splits(s2.left), _splits(s1.right), _splits(s2.right)
            ):
                f0 = Sequent(a1 + b1, x1 + y1)
                f1 = Sequent(a2 + b2, x2 + y2)
                if {f0, f1} == {s1, s2} or f0.key() > f1.key():
                    continue
                if (f0, f1) in seen or not (self.fits(f0) and self.fits(f1)):
                    continue
                seen.add((f0, f1))
                tried += 1
                if tried > self.budget.max_com_splits:
                    break
                yield from self._two_premise(goal, depth, ec_left, path, Rule.COM, (c1, c2), f0, f1)

    def _two_premise(
        self,
        goal: Hypersequent,
        depth: int,
        ec_left: int,
        path: frozenset,
        rule: Rule,
        principal_ids: tuple[int, ...],
        f0: Sequent,
        f1: Sequent,
    ) -> Iterator[Derivation]:
        if not (self.fits(f0) and self.fits(f1)):
            return
        goal0, (x0,) = self.premise_goal(goal, principal_ids, [f0])
        goal1, (x1,) = self.premise_goal(goal, principal_ids, [f1])
        log.trace("Backward {} on {} at depth {}", rule, [str(goal[c]) for c in principal_ids], depth)
        for d0 in self.derive(goal0, depth - 1, ec_left, path):
            if x0 not in d0.conclusion:
                yield d0
                continue
            for d1 in self.derive(goal1, depth - 1, ec_left, path):
                if x1 not in d1.conclusion:
                    yield d1
                    continue
                yield self._combine(goal, rule, principal_ids, d0, x0, d1, x1)

    def _combine(
        self, goal: Hypersequent, rule: Rule, principal_ids: tuple[int, ...], d0: Derivation, x0: int, d1: Derivation, x1: int
    ) -> Derivation:
        shared = sorted(set(d0.conclusion.ids) & set(d1.conclusion.ids))
        renaming = {c: self.ids.component() for c in shared}
        d1 = relabel_derivation(d1, {}, renaming)
        sequents = [goal[c] for c in principal_ids]
        ns = (1, 2) if rule is Rule.COM else None
        node = self.b.apply(rule, [d0, d1], (x0, x1), sequents, ns=ns, pids=list(principal_ids))
        for kept, removed in renaming.items():
            node = self.b.ec(node, kept, removed)
        return node

    # -- external contraction

    def _contraction(self, goal: Hypersequent, depth: int, ec_left: int, path: frozenset) -> Iterator[Derivation]:
        done: set[Sequent] = set()
        for cid, s in goal:
            if s in done:
                continue
            done.add(s)
            sub_goal, (x,) = self.premise_goal(goal, (), [s])
            for sub in self.derive(sub_goal, depth - 1, ec_left - 1, path):
                has_c, has_x = cid in sub.conclusion, x in sub.conclusion
                if has_c and has_x:
                    yield self.b.ec(sub, cid, x)
                elif has_x:
                    yield relabel_derivation(sub, {}, {x: cid})
                else:
                    yield sub


def _complete(b: DerivationBuilder, goal: Hypersequent, d: Derivation) -> Derivation:
    for cid, s in goal:
        if cid not in d.conclusion:
            d = b.apply(Rule.EW, [d], (), [s], pids=[cid])
    return d


def _shape(d: Derivation) -> tuple:
    return (d.rule.value, d.conclusion.multiset_key(), tuple(_shape(p) for p in d.premises))


def _prepare(goal: Hypersequent) -> IdSource:
    ids = IdSource()
    ids.reserve_for(goal)
    return ids


def prove(system: SystemId, goal: Hypersequent, budget: SearchBudget = SearchBudget()) -> Optional[Derivation]:
    """Search for a cut-free proof of a hypersequent.

    Only derivations the checker accepts are returned. In a single-conclusion
    system a goal with a component of two or more succedent formulas has no
    proof, and the search never builds such a component on the way up.

    :param system: The calculus to prove in; a labeled system is searched in
        its base.
    :type system: SystemId
    :param goal: The hypersequent to prove.
    :type goal: Hypersequent
    :param budget: Depth and branching limits of the search.
    :type budget: SearchBudget
    :return: A checked proof of ``goal``, or None when the budget runs out.
    :rtype: Optional[Derivation]
    """
    base = system.as_base()
    ids = _prepare(goal)
    search = _Search(base, budget, ids)
    if not search.admits(goal):
        log.debug("{} has a component {} cannot prove", goal, base)
        return None
    for depth in range(budget.max_depth + 1):
        for d in search.derive(goal, depth, budget.max_ec_per_branch, frozenset()):
            proof = _complete(search.b, goal, d)
            violation = check_proof(base, proof)
            if violation is not None:
                log.warning("Search built a proof of {} the checker rejects: {}", goal, violation)
                continue
            log.debug(
                "Proved {} at depth {} after {}",
                goal,
                depth,
                _pluralise("search step", search.steps),
                details={"system": str(system), "size": proof.size},
            )
            return proof
    log.debug("No proof of {} within depth {}", goal, budget.max_depth, details={"steps": search.steps})
    return None


def prove_all_splits(system: SystemId, goal: Hypersequent, budget: SearchBudget = SearchBudget()) -> Iterator[Derivation]:
    """Enumerate structurally distinct cut-free proofs found within the budget."""
    ids = _prepare(goal)
    search = _Search(system.as_base(), budget, ids)
    seen: set[tuple] = set()
    for depth in range(budget.max_depth + 1):
        for d in search.derive(goal, depth, budget.max_ec_per_branch, frozenset()):
            proof = _complete(search.b, goal, d)
            shape = _shape(proof)
            if shape in seen:
                continue
            seen.add(shape)
            yield proof


def prove_checked(system: SystemId, goal: Hypersequent, budget: SearchBudget = SearchBudget()) -> Optional[Derivation]:
    """``prove`` followed by the checker; a failed check is a bug and raises."""
    proof = prove(system, goal, budget)
    if proof is not None:
        violation = check_proof(system.as_base(), proof)
        if violation is not None:
            raise violation
    return proof


