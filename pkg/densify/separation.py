"""Separation: rewriting copies away with elimination rules.

A branch is a derivation from OPEN leaves (relabeled copies of the root of
``tau_star``) to a closed hypersequent whose components remember the root
component they descend from. A component descending from a copy listed in
the registry is a copy of that entry.

Separating one entry repeatedly replaces the copies that lie on its thread
by what their focus derives, then contracts every duplicated closure at
once. Separating several parallel entries splits them at their
intersection node ``V``, separates each side on its own and splices the
left run into the right one where their steps cross ``V``.
``GIndexFamily`` drives these runs over growing sets of entries until no
copy is left.
"""

from typing import Callable, Optional
from collections import Counter
from dataclasses import dataclass, field, replace
import itertools

import inflect
from loguru import logger as log

from .builder import DerivationBuilder, refresh_ids
from .calculus import Derivation, NodeAddr, Rule, SystemId, below, check_node, parallel, strictly_below
from .config import SeparationBudget, Settings
from .errors import BudgetExhausted, ExtractionError, InvariantViolation
from .extraction import (
    EliminationRule,
    entry_template,
    extract_single,
    instantiate_elimination,
    intersection_node,
    leads_to,
)
from .preprocess import PecRegistry, PipelineTrace
from .syntax import Hypersequent, IdSource, closure_partition_ids, is_closed, is_copy

_p = inflect.engine()

ROOT: NodeAddr = ()


@dataclass(frozen=True, eq=False)
class Step:
    """One node of the separation skeleton.

    ``kind`` is ``branch`` for an input, ``eliminate`` for an elimination
    rule, ``contract`` for EC_Ω* and ``identity`` for the ID_Ω standing in
    for a contraction with nothing to remove. ``entries``, ``foci`` and
    ``targets`` follow ``inputs``: the entry each premise gives up a copy
    of, the ``tau_star`` node of its focus and the root component the copy
    descends from. ``marks`` holds ``(sequent key, entry)`` for every
    component of the conclusion, eigen ids left out.
    """

    kind: str
    conclusion: Hypersequent
    inputs: tuple["Step", ...] = ()
    entries: tuple[int, ...] = ()
    foci: tuple[NodeAddr, ...] = ()
    targets: tuple[int, ...] = ()
    phase: str = ""
    source: Optional["Branch"] = None
    marks: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.inputs)


@dataclass
class Branch:
    derivation: Derivation
    origin: dict[int, int]
    step: Optional[Step] = None
    owner: Optional[int] = None

    @property
    def conclusion(self) -> Hypersequent:
        return self.derivation.conclusion


@dataclass(frozen=True)
class LedgerEntry:
    """How a replayed contraction premise differs from the one it stands in for.

    ``fused`` counts the grafts the premise took in: the fused steps of its
    module plus one for every contraction above it that took one in. Each
    graft swaps the same removed part for the same added part, so both
    differences split into ``fused`` equal blocks.
    """

    stage: str
    position: int
    before: Counter
    after: Counter
    fused: int

    @property
    def removed(self) -> Counter:
        return self.before - self.after

    @property
    def added(self) -> Counter:
        return self.after - self.before

    def block(self) -> Optional[tuple[Counter, Counter]]:
        """The removed and added part of a single graft; None if the differences do not split evenly."""
        removed, added = self.removed, self.added
        if self.fused == 0:
            return (Counter(), Counter()) if not removed and not added else None
        if any(n % self.fused for n in itertools.chain(removed.values(), added.values())):
            return None
        return (
            Counter({k: n // self.fused for k, n in removed.items()}),
            Counter({k: n // self.fused for k, n in added.items()}),
        )


@dataclass
class SeparationRun:
    """One separation: its owners, stages, pivots and result.

    Multi-entry runs also carry the intersection node they split at, which
    of the three cases applied, the runs of both sides and the ledger of
    every replayed contraction.
    """

    owners: tuple[int, ...]
    stages: list[Branch]
    pivots: list[int]
    result: Branch
    intersection: Optional[NodeAddr] = None
    case: str = "one"
    parts: tuple["SeparationRun", ...] = ()
    ledger: list[LedgerEntry] = field(default_factory=list)

    @property
    def steps(self) -> list[Step]:
        return _collect(self.result.step)


@dataclass
class SeparationContext:
    """Everything one separation needs: the labeled proof, its registry, id supply and limits."""

    tau_star: Derivation
    registry: PecRegistry
    system: SystemId
    ids: IdSource = field(default_factory=IdSource)
    budget: SeparationBudget = SeparationBudget()
    assert_lemmas: bool = False
    _templates: dict = field(default_factory=dict)
    _leads: dict = field(default_factory=dict)
    _family: Optional["GIndexFamily"] = None

    def __post_init__(self):
        self.system = self.system.as_omega()

    @classmethod
    def from_trace(cls, trace: PipelineTrace, settings: Optional[Settings] = None) -> "SeparationContext":
        settings = settings or Settings()
        return cls(
            trace.tau_star,
            trace.registry,
            trace.system,
            trace.ids,
            settings.separation,
            settings.assert_lemmas,
        )

    def template(self, entries: list[int]) -> EliminationRule:
        key = tuple(sorted(entries))
        if key not in self._templates:
            self._templates[key] = entry_template(self.tau_star, self.registry, list(key), self.assert_lemmas)
        return self._templates[key]

    def leads(self, i: int, j: int) -> bool:
        if (i, j) not in self._leads:
            self._leads[(i, j)] = leads_to(self.tau_star, self.registry, i, j)
        return self._leads[(i, j)]

    def node_of(self, entry: int) -> NodeAddr:
        return self.registry[entry].node

    @property
    def family(self) -> "GIndexFamily":
        if self._family is None:
            self._family = GIndexFamily(self)
        return self._family

    def copies(self, branch: Branch) -> list[tuple[int, int]]:
        """``(component id, entry)`` of every copy in the branch conclusion."""
        out = []
        for cid in branch.conclusion.ids:
            entry = self.registry.owner_of(branch.origin.get(cid, -1))
            if entry is not None:
                out.append((cid, entry))
        return out

    def marks(self, g: Hypersequent, origin: dict[int, int]) -> tuple:
        return tuple((s.strip_eigens().key(), self.registry.owner_of(origin.get(c, -1))) for c, s in g)

    def leaf(self, branch: Branch, owner: Optional[int] = None) -> Branch:
        """``branch`` as the input of a run; its own history stays out of the run's skeleton."""
        step = Step("branch", branch.conclusion, source=branch, marks=self.marks(branch.conclusion, branch.origin))
        return replace(branch, step=step, owner=branch.owner if owner is None else owner)

    def start(self) -> Branch:
        root = self.tau_star.conclusion
        return self.leaf(Branch(Derivation(Rule.OPEN, root), {c: c for c in root.ids}))


def _collect(step: Optional[Step]) -> list[Step]:
    out: list[Step] = []
    seen: set[int] = set()

    def go(s: Step):
        if id(s) in seen:
            return
        seen.add(id(s))
        for i in s.inputs:
            go(i)
        out.append(s)

    if step is not None:
        go(step)
    return out


def _step_of(ctx: SeparationContext, branch: Branch) -> Step:
    return branch.step if branch.step is not None else ctx.leaf(branch).step


def eliminate(
    ctx: SeparationContext,
    rule: EliminationRule,
    targets: list[tuple[Branch, int]],
    system: Optional[SystemId] = None,
    phase: str = "",
) -> Branch:
    """Apply ``rule`` to one copy in each target branch.

    Targets after the first get fresh ids, so the same branch may appear
    more than once. ``phase`` tags the skeleton step: ``along`` for steps
    of a separation along an intersection node, ``graft`` for fused steps.
    """
    prepared = []
    origin: dict[int, int] = {}
    sources: list[tuple[int, int]] = []
    for k, (branch, cid) in enumerate(targets):
        root_cid = branch.origin.get(cid, -1)
        entry = ctx.registry.owner_of(root_cid)
        if entry is None:
            raise InvariantViolation("separation", f"component {cid} is not a copy of any registry entry")
        sources.append((entry, root_cid))
        d, o = branch.derivation, branch.origin
        if k > 0:
            d, comp_map, _ = refresh_ids(d, ctx.ids, eigen=True)
            o = {comp_map[c]: v for c, v in o.items() if c in comp_map}
            cid = comp_map[cid]
        prepared.append((d, (cid,)))
        origin.update({c: v for c, v in o.items() if c != cid})

    ordered = prepared
    if len(prepared) > 1:
        by_node = {ctx.node_of(entry): target for (entry, _), target in zip(sources, prepared)}
        ordered = [by_node[h] for _, h in rule.leaves]
    derivation, added = instantiate_elimination(rule, ordered, ctx.ids, system or ctx.system)
    origin.update(added)
    origin = {c: v for c, v in origin.items() if c in derivation.conclusion}

    step = Step(
        "eliminate",
        derivation.conclusion,
        tuple(_step_of(ctx, b) for b, _ in targets),
        entries=tuple(e for e, _ in sources),
        foci=tuple(ctx.node_of(e) for e, _ in sources),
        targets=tuple(r for _, r in sources),
        phase=phase,
        marks=ctx.marks(derivation.conclusion, origin),
    )
    log.trace("Eliminated {} ({}): {}", [e for e, _ in sources], phase or "plain", derivation.conclusion)
    return Branch(derivation, origin, step, targets[0][0].owner)


def duplicated_closures(g: Hypersequent) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """``(kept, removed)`` pairs of closures, keeping the smallest ids of each class of copies."""
    closures = closure_partition_ids(g)
    parent = list(range(len(closures)))

    def find(k: int) -> int:
        while parent[k] != k:
            parent[k] = parent[parent[k]]
            k = parent[k]
        return k

    for i, j in itertools.combinations(range(len(closures)), 2):
        if len(closures[i]) != len(closures[j]) or find(i) == find(j):
            continue
        if is_copy(g.restrict(closures[i]), g.restrict(closures[j])) is not None:
            parent[find(j)] = find(i)

    groups: dict[int, list[int]] = {}
    for k in range(len(closures)):
        groups.setdefault(find(k), []).append(k)
    out = []
    for members in groups.values():
        ordered = sorted(members, key=lambda k: min(closures[k]))
        for k in ordered[1:]:
            out.append((closures[ordered[0]], closures[k]))
    return out


def contract_full(ctx: SeparationContext, branch: Branch) -> Branch:
    """Remove every closure that is a copy of another one in a single EC_Ω* step."""
    copies = duplicated_closures(branch.conclusion)
    if not copies:
        return branch
    d = DerivationBuilder(ctx.ids).ec_omega(branch.derivation, copies, star=True)
    check_node(ctx.system, d, allow_open=True)
    origin = {c: v for c, v in branch.origin.items() if c in d.conclusion}
    step = Step("contract", d.conclusion, (_step_of(ctx, branch),), marks=ctx.marks(d.conclusion, origin))
    log.trace("Contracted {} duplicated {}", len(copies), _p.plural("closure", len(copies)))
    return Branch(d, origin, step, branch.owner)


def _close(ctx: SeparationContext, branch: Branch) -> Branch:
    """Contract ``branch``; with nothing to contract the skeleton records an ID_Ω."""
    out = contract_full(ctx, branch)
    if out is not branch:
        return out
    step = Step("identity", branch.conclusion, (_step_of(ctx, branch),), marks=_step_of(ctx, branch).marks)
    return replace(branch, step=step)


def check_branch(ctx: SeparationContext, branch: Branch, owner: int, indexes: list[int]) -> None:
    """Raise unless ``branch`` may feed the separation of ``owner`` within ``indexes``.

    The branch must be closed and hold a copy of ``owner``; every copy in it
    lies below ``owner`` or parallel to every entry of ``indexes``.
    """
    if not is_closed(branch.conclusion):
        raise InvariantViolation("branch", f"input of entry {owner} is not closed: {branch.conclusion}")
    found = ctx.copies(branch)
    if owner not in {j for _, j in found}:
        raise InvariantViolation("branch", f"input of entry {owner} holds no copy of it: {branch.conclusion}")
    h = ctx.node_of(owner)
    for _, j in found:
        hj = ctx.node_of(j)
        if not below(hj, h) and not all(parallel(hj, ctx.node_of(i)) for i in indexes):
            raise InvariantViolation(
                "branch",
                f"copy of entry {j} in the input of entry {owner} lies neither below it "
                f"nor parallel to {sorted(indexes)}",
            )


def _check_separated(ctx: SeparationContext, branch: Branch, indexes: tuple[int, ...]) -> None:
    for _, j in ctx.copies(branch):
        for i in indexes:
            if not parallel(ctx.node_of(j), ctx.node_of(i)):
                raise InvariantViolation("separated", f"copy of entry {j} survives the separation of entry {i}")


def _descend(
    ctx: SeparationContext,
    branch: Branch,
    h: NodeAddr,
    system: Optional[SystemId] = None,
    phase: str = "",
) -> tuple[Branch, list[Branch], list[int]]:
    """Eliminate copies whose node lies on the thread of ``h``, deepest first."""
    stages = [branch]
    pivots: list[int] = []
    eliminations = 0
    while True:
        bad = [(cid, j) for cid, j in ctx.copies(branch) if below(ctx.node_of(j), h)]
        if not bad:
            return branch, stages, pivots
        pivot = max({j for _, j in bad}, key=lambda j: len(ctx.node_of(j)))
        top = ctx.node_of(pivot)
        if any(not below(ctx.node_of(j), top) for _, j in bad):
            raise InvariantViolation("separation", f"no copy entry dominates the others on the thread of {list(h)}")
        if ctx.assert_lemmas and pivots and not strictly_below(top, ctx.node_of(pivots[-1])):
            raise InvariantViolation("separation", f"pivot {pivot} does not lie strictly below pivot {pivots[-1]}")
        pivots.append(pivot)
        rule = ctx.template([pivot])
        for cid in sorted(c for c, j in bad if j == pivot):
            eliminations += 1
            if eliminations > ctx.budget.max_eliminations:
                raise BudgetExhausted("separation", f"more than {ctx.budget.max_eliminations} eliminations on one thread")
            branch = eliminate(ctx, rule, [(branch, cid)], system, phase)
        if ctx.assert_lemmas and (system is None or system.omega) and not is_closed(branch.conclusion):
            raise InvariantViolation("separation", f"stage {len(stages)} is not closed: {branch.conclusion}")
        stages.append(branch)


def separate_one(ctx: SeparationContext, i: int, branch: Optional[Branch] = None) -> SeparationRun:
    """Separate entry ``i``: no copy of an entry on its thread survives.

    :param ctx: The separation context.
    :type ctx: SeparationContext
    :param i: Registry index of the entry to separate.
    :type i: int
    :param branch: The input, ``G | G*`` by default; see ``check_branch``.
    :type branch: Branch, optional
    :return: The run; its result ends in an EC_Ω* step, or an ID_Ω one in
        the skeleton when nothing is duplicated.
    :rtype: SeparationRun
    """
    entry = ctx.registry[i]
    if entry.degenerate:
        raise ExtractionError(f"entry {i} has no node to separate along")
    branch = ctx.leaf(branch or ctx.start(), i)
    check_branch(ctx, branch, i, [i])
    last, stages, pivots = _descend(ctx, branch, entry.node)
    result = _close(ctx, last)
    _check_separated(ctx, result, (i,))
    log.debug(
        "Separated entry {} with {} and {} {}",
        i,
        _p.no("pivot", len(pivots)),
        len(stages) - 1,
        _p.plural("stage", len(stages) - 1),
    )
    return SeparationRun((i,), stages, pivots, result)


def separate_along(ctx: SeparationContext, h: NodeAddr, cids: tuple[int, ...]) -> tuple[Hypersequent, Derivation]:
    """Extract at ``h`` and eliminate every copy whose node lies on the thread of ``h``."""
    rule = extract_single(ctx.tau_star, h, cids, assert_lemmas=ctx.assert_lemmas)
    start = ctx.leaf(Branch(rule.derivation, {c: c for c in rule.conclusion.ids}))
    system = ctx.system
    if not is_closed(rule.conclusion):
        log.debug("Extraction at {} is not closed; eliminating in {}", list(h), ctx.system.as_base())
        system = ctx.system.as_base()
    last, _, _ = _descend(ctx, start, tuple(h), system, "along")
    return last.conclusion, last.derivation


class _Graft:
    """Replays finished runs of the two sides of an intersection node ``V``.

    Stage one replays the left run for one step of the right run that
    crosses ``V``: every left step crossing ``V`` that leads to it both
    ways is fused with it into one elimination on both their inputs.
    Stage two replays the right run with each crossing step that leads to
    every left owner replaced by its stage one replay. Both drop the steps
    whose foci lie on the thread of ``V`` and instead separate along ``V``
    right before each contraction.
    """

    def __init__(self, ctx: SeparationContext, split: NodeAddr, left: tuple[int, ...], right: tuple[int, ...]):
        self.ctx = ctx
        self.split = tuple(split)
        self.left = left
        self.right = right
        self.ledger: list[LedgerEntry] = []

    def crosses(self, step: Step, side: int) -> bool:
        """True when ``step`` eliminates foci above the ``side`` child of ``V`` through the rule at ``V``."""
        if step.kind != "eliminate":
            return False
        child = self.split + (side,)
        if not all(below(child, f) for f in step.foci):
            return False
        return self.split in self.ctx.template(list(step.entries)).origin.values()

    def reaches(self, run: SeparationRun, side: int) -> bool:
        return any(self.crosses(s, side) for s in run.steps)

    def _target(self, step: Step, k: int, branch: Branch) -> Optional[tuple[Branch, int]]:
        entry, wanted = step.entries[k], step.targets[k]
        found = sorted(c for c, j in self.ctx.copies(branch) if j == entry)
        if not found:
            return None
        exact = [c for c in found if branch.origin.get(c) == wanted]
        return branch, (exact or found)[0]

    def _reapply(self, step: Step, replayed: list[Branch]) -> Branch:
        targets = [self._target(step, k, b) for k, b in enumerate(replayed)]
        if any(t is None for t in targets):
            if len(replayed) == 1:
                log.trace("No copy of entry {} left to replay a step on; step dropped", step.entries[0])
                return replayed[0]
            raise InvariantViolation("graft", f"no copy of entries {list(step.entries)} to replay a step on")
        return eliminate(self.ctx, self.ctx.template(list(step.entries)), targets, phase=step.phase)

    def replay(self, root: Step, swap: Callable[[Step, list[Branch]], Optional[Branch]], stage: str) -> Branch:
        ctx, split = self.ctx, self.split
        entries: list[LedgerEntry] = []
        position = itertools.count(1)

        def go(step: Step) -> tuple[Branch, int]:
            if step.kind == "branch":
                return replace(step.source, step=step), 0
            if step.kind == "eliminate":
                done = [go(s) for s in step.inputs]
                replayed = [b for b, _ in done]
                fused = sum(m for _, m in done)
                out = swap(step, replayed)
                if out is not None:
                    return out, fused + 1
                if all(below(f, split) for f in step.foci):
                    if step.arity > 1:
                        raise InvariantViolation("multi-focus height", f"step on {list(step.entries)} lies under V")
                    return replayed[0], fused
                return self._reapply(step, replayed), fused
            premise, fused = go(step.inputs[0])
            premise, _, _ = _descend(ctx, premise, split, phase="along")
            entries.append(
                LedgerEntry(
                    stage,
                    next(position),
                    Counter(step.inputs[0].marks),
                    Counter(_step_of(ctx, premise).marks),
                    fused,
                )
            )
            return _close(ctx, premise), (1 if fused else 0)

        out, _ = go(root)
        self._settle(entries, stage)
        return out

    def _settle(self, entries: list[LedgerEntry], stage: str) -> None:
        """Check that every replayed contraction differs from its original by whole grafts."""
        ctx = self.ctx
        self.ledger.extend(entries)
        blocks = [e.block() for e in entries]
        reference = next((b for e, b in zip(entries, blocks) if e.fused and b is not None), None)
        problems = []
        for e, b in zip(entries, blocks):
            if b is None or (e.fused and b != reference):
                problems.append(f"contraction {e.position} of the {stage} replay took {e.fused} uneven grafts")
        if stage == "left" and reference is not None:
            side = self.split + (0,)
            for (_, j), n in reference[0].items():
                if j is not None and not parallel(ctx.node_of(j), side):
                    problems.append(f"a graft removed a copy of entry {j} that lies on the thread of {list(side)}")
        for problem in problems:
            log.warning("Graft ledger: {}", problem)
        if problems and ctx.assert_lemmas:
            raise InvariantViolation("ledger", "; ".join(problems))

    def stage_one(self, run_l: SeparationRun, crossing: Step, inputs: list[Branch]) -> Branch:
        ctx = self.ctx

        def swap(step: Step, replayed: list[Branch]) -> Optional[Branch]:
            if not self.crosses(step, 0):
                return None
            if not all(ctx.leads(i, j) and ctx.leads(j, i) for i in step.entries for j in crossing.entries):
                return None
            targets = [self._target(step, k, b) for k, b in enumerate(replayed)]
            targets += [self._target(crossing, k, b) for k, b in enumerate(inputs)]
            if any(t is None for t in targets):
                return None
            try:
                rule = ctx.template(list(step.entries) + list(crossing.entries))
            except ExtractionError as e:
                log.debug("Left step on {} stays unfused: {}", list(step.entries), e)
                return None
            return eliminate(ctx, rule, targets, phase="graft")

        return self.replay(run_l.result.step, swap, "left")

    def stage_two(self, run_l: SeparationRun, run_r: SeparationRun) -> Branch:
        ctx = self.ctx

        def swap(step: Step, replayed: list[Branch]) -> Optional[Branch]:
            if not self.crosses(step, 1):
                return None
            if not all(ctx.leads(i, j) for i in step.entries for j in self.left):
                return None
            return self.stage_one(run_l, step, replayed)

        return self.replay(run_r.result.step, swap, "right")


def separate_multi(
    ctx: SeparationContext,
    indexes: list[int],
    branches: Optional[list[Branch]] = None,
) -> SeparationRun:
    """Separate pairwise parallel entries together.

    The entries split at their intersection node ``V`` into a left and a
    right family, each separated on its own. When no left step crosses
    ``V`` the left result is the answer, likewise for the right. Otherwise
    the right run is replayed with the left run grafted in (see ``_Graft``).

    :param ctx: The separation context.
    :type ctx: SeparationContext
    :param indexes: Registry indexes of pairwise parallel entries.
    :type indexes: list[int]
    :param branches: One input per entry in the order of ``indexes``. By
        default the input of entry ``i`` is the index family's member for
        the other entries.
    :type branches: list[Branch], optional
    :return: The run; no copy in its result lies on the thread of an entry.
    :rtype: SeparationRun
    :raises InvariantViolation: If an input is not a valid branch or a
        checked property of the run fails.
    """
    indexes = list(indexes)
    if not indexes:
        raise ExtractionError("no entry to separate")
    if branches is None:
        branches = [ctx.family.resolve(frozenset(indexes) - {i}) for i in indexes]
        missing = [i for i, b in zip(indexes, branches) if b is None]
        if missing:
            raise InvariantViolation("branch", f"no input for {_p.plural('entry', len(missing))} {missing}")
    if len(branches) != len(indexes):
        raise InvariantViolation("branch", f"{_p.no('input', len(branches))} for {_p.no('entry', len(indexes))}")
    if len(indexes) == 1:
        return separate_one(ctx, indexes[0], branches[0])

    split = intersection_node(ctx.tau_star, [ctx.node_of(i) for i in indexes])
    inputs = {i: ctx.leaf(b, i) for i, b in zip(indexes, branches)}
    for i in indexes:
        check_branch(ctx, inputs[i], i, indexes)
    left = tuple(i for i in indexes if ctx.node_of(i) in split.left)
    right = tuple(i for i in indexes if ctx.node_of(i) in split.right)
    run_l = separate_multi(ctx, list(left), [inputs[i] for i in left])
    run_r = separate_multi(ctx, list(right), [inputs[i] for i in right])

    graft = _Graft(ctx, split.node, left, right)
    if not graft.reaches(run_l, 0):
        case, result = "left", run_l.result
    elif not graft.reaches(run_r, 1):
        case, result = "right", run_r.result
    else:
        case, result = "graft", graft.stage_two(run_l, run_r)
    run = SeparationRun(
        tuple(indexes),
        [run_l.result, run_r.result, result],
        [],
        result,
        split.node,
        case,
        (run_l, run_r),
        graft.ledger,
    )
    _check_separated(ctx, result, run.owners)
    if ctx.assert_lemmas:
        check_run(ctx, run)
    log.debug(
        "Separated {} at {} ({}, {} replayed)",
        list(indexes),
        list(split.node),
        case,
        _p.no("contraction", len(graft.ledger)),
    )
    return run


class GIndexFamily:
    """Closed hypersequents ``G_I`` derivable from ``G | G*``, one per set ``I`` of entries.

    Every copy left in ``G_I`` lies parallel to every entry of ``I``, so the
    member for all active entries holds no copy at all. The empty set maps
    to ``G | G*``. A set whose member cannot be built maps to None.
    """

    def __init__(self, ctx: SeparationContext):
        self.ctx = ctx
        self.members: dict[frozenset, Optional[Branch]] = {}

    def certified(self, branch: Branch, indexes) -> bool:
        ctx = self.ctx
        return all(parallel(ctx.node_of(j), ctx.node_of(i)) for _, j in ctx.copies(branch) for i in indexes)

    def resolve(self, indexes) -> Optional[Branch]:
        indexes = frozenset(indexes)
        if indexes not in self.members:
            if len(self.members) >= self.ctx.budget.max_members:
                raise BudgetExhausted("separation", f"more than {self.ctx.budget.max_members} index sets resolved")
            self.members[indexes] = self._build(indexes)
        return self.members[indexes]

    def pick(self, branch: Branch, k: int, rest) -> Optional[int]:
        """The entry to separate in ``branch`` so that it stops clashing with entry ``k``.

        Candidates are the entries on the thread of ``k`` with a copy in
        ``branch`` for which ``branch`` is a valid input next to ``rest``;
        the deepest wins, the smallest index on ties.
        """
        ctx = self.ctx
        found = ctx.copies(branch)
        hk = ctx.node_of(k)
        qualifying = []
        for c in sorted({j for _, j in found}):
            h = ctx.node_of(c)
            if parallel(h, hk):
                continue
            scope = [h] + [ctx.node_of(i) for i in rest]
            if all(below(ctx.node_of(j), h) or all(parallel(ctx.node_of(j), g) for g in scope) for _, j in found):
                qualifying.append(c)
        if not qualifying:
            return None
        return max(qualifying, key=lambda c: (len(ctx.node_of(c)), -c))

    def _build(self, indexes: frozenset) -> Optional[Branch]:
        ctx = self.ctx
        if not indexes:
            return ctx.start()
        order = sorted(indexes, key=lambda k: (len(ctx.node_of(k)), k))
        smaller: dict[int, Optional[Branch]] = {}
        for k in order:
            g = self.resolve(indexes - {k})
            if g is not None and self.certified(g, indexes):
                log.trace("Index set {} reuses the member for {}", sorted(indexes), sorted(indexes - {k}))
                return g
            smaller[k] = g
        if any(g is None for g in smaller.values()):
            return None

        chosen: dict[int, Branch] = {}
        for k in order:
            c = self.pick(smaller[k], k, indexes - {k})
            if c is None:
                log.debug("No entry to separate for {} within {}", k, sorted(indexes))
                return None
            chosen.setdefault(c, smaller[k])
        owners = sorted(chosen)
        if any(not parallel(ctx.node_of(a), ctx.node_of(b)) for a, b in itertools.combinations(owners, 2)):
            log.debug("Chosen entries {} for {} are not parallel", owners, sorted(indexes))
            return None
        try:
            run = separate_multi(ctx, owners, [chosen[c] for c in owners])
        except (InvariantViolation, ExtractionError) as e:
            log.debug("Separating {} for {} failed: {}", owners, sorted(indexes), e)
            return None
        if not self.certified(run.result, indexes):
            return None
        log.debug(
            "Index set {} resolved by separating {}: {} left",
            sorted(indexes),
            owners,
            _p.no("copy", len(ctx.copies(run.result))),
        )
        return run.result


def eliminate_copies(ctx: SeparationContext) -> Branch:
    """A branch whose conclusion holds no copy of any registry entry."""
    everything = frozenset(e.index for e in ctx.registry.active())
    branch = ctx.family.resolve(everything)
    if branch is None:
        raise InvariantViolation("index family", f"no member for entries {sorted(everything)}")
    left = ctx.copies(branch)
    if left:
        raise InvariantViolation("separated", f"{_p.no('copy', len(left))} left after separating every entry")
    return branch


@dataclass(frozen=True)
class SkeletonNode:
    step: Step
    anchor: NodeAddr
    parent: Optional[int]


@dataclass
class Skeleton:
    """A run's steps as a tree from its last step up to its inputs.

    The anchor of a node is the ``tau_star`` node its hypersequent hangs
    from: the focus node it supplies when it is a premise of an
    elimination, the root when it is a premise of a contraction or the
    last hypersequent of the run.
    """

    nodes: list[SkeletonNode]
    children: dict[int, list[int]] = field(default_factory=dict)

    @property
    def root(self) -> SkeletonNode:
        return self.nodes[0]

    @property
    def anchors(self) -> dict[int, NodeAddr]:
        return {k: n.anchor for k, n in enumerate(self.nodes)}

    @property
    def is_linear(self) -> bool:
        return all(n.step.arity <= 1 for n in self.nodes)

    def leaves(self) -> list[SkeletonNode]:
        return [n for n in self.nodes if n.step.kind == "branch"]


def build_skeleton(run: SeparationRun) -> Skeleton:
    nodes: list[SkeletonNode] = []
    children: dict[int, list[int]] = {}
    stack: list[tuple[Step, NodeAddr, Optional[int]]] = [(run.result.step, ROOT, None)]
    while stack:
        step, anchor, parent = stack.pop()
        k = len(nodes)
        nodes.append(SkeletonNode(step, anchor, parent))
        children[k] = []
        if parent is not None:
            children[parent].append(k)
        if step.kind == "eliminate":
            premises = list(zip(step.inputs, step.foci))
        else:
            premises = [(s, ROOT) for s in step.inputs]
        for s, a in reversed(premises):
            stack.append((s, a, k))
    return Skeleton(nodes, children)


def skeleton_violations(skeleton: Skeleton, split: NodeAddr, owners: list[NodeAddr]) -> list[tuple[str, str]]:
    """``(label, detail)`` for every shape property of a multi-entry skeleton that fails.

    ``split`` is the intersection node and ``owners`` the nodes of the
    separated entries.
    """
    out = []
    nodes = skeleton.nodes
    for k, n in enumerate(nodes):
        step = n.step
        if not any(below(n.anchor, h) for h in owners):
            out.append(("anchor under owner", f"node {k} hangs from {list(n.anchor)}"))
        if parallel(n.anchor, split):
            out.append(("anchor beside split", f"node {k} hangs from {list(n.anchor)}"))
        if step.kind != "eliminate":
            continue
        if not 1 <= step.arity <= len(owners):
            out.append(("elimination arity", f"node {k} has {step.arity} premises"))
        if step.arity > 1 and not all(strictly_below(split, f) for f in step.foci):
            out.append(("multi-focus height", f"node {k} fuses foci {[list(f) for f in step.foci]}"))
        if not any(below(n.anchor, f) for f in step.foci):
            out.append(("anchor descends", f"node {k} hangs above its own foci"))
        if any(below(f, split) for f in step.foci):
            if step.arity != 1:
                out.append(("one-premise below split", f"node {k} has {step.arity} premises"))
            j = k
            while nodes[j].parent is not None and nodes[nodes[j].parent].step.kind == "eliminate":
                parent = nodes[j].parent
                if not below(nodes[j].anchor, split) or nodes[parent].step.arity != 1:
                    out.append(("one-premise below split", f"node {parent} follows a step under the split"))
                    break
                j = parent
        for c in skeleton.children[k]:
            if strictly_below(split, nodes[c].anchor):
                out.extend(_module_height(skeleton, c, split))
    return out


def _module_height(skeleton: Skeleton, start: int, split: NodeAddr) -> list[tuple[str, str]]:
    """Everything above ``start`` up to the next contraction hangs above the split."""
    out = []
    stack = [start]
    while stack:
        k = stack.pop()
        if skeleton.nodes[k].step.kind != "eliminate":
            continue
        for c in skeleton.children[k]:
            if not strictly_below(split, skeleton.nodes[c].anchor):
                out.append(("module height", f"node {c} hangs from {list(skeleton.nodes[c].anchor)}"))
            else:
                stack.append(c)
    return out


def check_run(ctx: SeparationContext, run: SeparationRun) -> None:
    """Check the shape of a multi-entry run and of the steps it is made of.

    Raises ``InvariantViolation`` labelled with the first failing property.
    """
    if run.intersection is None:
        return
    split = run.intersection
    owners = [ctx.node_of(i) for i in run.owners]
    skeleton = build_skeleton(run)
    problems = skeleton_violations(skeleton, split, owners)

    for n in skeleton.nodes:
        if n.step.kind != "eliminate":
            continue
        rule = ctx.template(list(n.step.entries))
        for c in rule.conclusion.ids:
            j = ctx.registry.owner_of(c)
            if j is not None and any(below(h, ctx.node_of(j)) for h in owners):
                problems.append(("template copies", f"step on {list(n.step.entries)} brings back entry {j}"))

    for part, side in zip(run.parts, (0, 1)):
        child = split + (side,)
        for n in build_skeleton(part).nodes:
            if strictly_below(split, n.anchor) and not below(child, n.anchor):
                problems.append(("crossing side", f"side {side} hangs from {list(n.anchor)}"))

    if problems:
        label, detail = problems[0]
        raise InvariantViolation(label, f"{detail} (separating {list(run.owners)} at {list(split)})")
