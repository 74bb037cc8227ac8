"""From a cut-free proof of the density premise to a labeled proof of G|G*.

Five stages, each checked in its own system:

1. ``and_r`` / ``or_l`` become ``and_rw`` / ``or_lw`` followed by one EC.
2. Every maximal chain of EC becomes one ID_Ω node; the surplus copies are
   carried down to the root as extra side components.
3. EW is removed by pruning the derivation to what is actually used.
4. Eigenvariable occurrences born in ⊤/⊥ leaf contexts or as weakening
   formulas are replaced by ⊤ (left) and ⊥ (right).
5. Every ``p => p`` leaf gets its own id, ids are propagated down, ID_Ω
   nodes are flattened and the pseudo-contraction registry is built.
"""

from typing import Callable, Optional
from dataclasses import dataclass, field, replace
import itertools

import inflect
from loguru import logger as log
from pydantic import BaseModel, ConfigDict, Field

from .builder import DerivationBuilder, component_ids, eigen_ids, map_sequents, normalize_ids, strip_labels
from .calculus import (
    Derivation,
    NodeAddr,
    Rule,
    SystemId,
    check_labeling,
    check_proof,
    detect_full_ec,
    focus_layout,
    proof_stats,
)
from .errors import InvariantViolation, PipelineError
from .syntax import (
    BOT,
    TOP,
    Eigen,
    Hypersequent,
    IdSource,
    Sequent,
    canonical_text,
)

_p = inflect.engine()


class PecEntry(BaseModel):
    """One pseudo-contraction node of the labeled proof.

    ``focus`` is the component id of the copy the rule below ``node`` works
    on; ``copies`` are the ids of the other copies, which stay side
    components down to the root. A degenerate entry has no such node.
    """

    model_config = ConfigDict(frozen=True)

    index: int
    node: Optional[tuple[int, ...]] = None
    focus: Optional[int] = None
    copies: tuple[int, ...] = ()
    marker: tuple[int, ...] = ()
    degenerate: bool = False

    @property
    def multiplicity(self) -> int:
        return len(self.copies) + 1


class PecRegistry(BaseModel):
    entries: list[PecEntry] = Field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, index: int) -> PecEntry:
        """Entries are numbered from 1."""
        for entry in self.entries:
            if entry.index == index:
                return entry
        raise KeyError(index)

    def active(self) -> list[PecEntry]:
        return [e for e in self.entries if not e.degenerate]

    def copy_ids(self) -> set[int]:
        return {c for e in self.active() for c in e.copies}

    def owner_of(self, cid: int) -> Optional[int]:
        for e in self.active():
            if cid in e.copies:
                return e.index
        return None

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PecRegistry":
        return cls.model_validate_json(text)


@dataclass
class PipelineTrace:
    """The stage derivations τ′..τ* and the registry."""

    system: SystemId
    tau: Derivation
    tau1: Derivation
    tau2: Derivation
    tau3: Derivation
    tau4: Derivation
    tau_star: Derivation
    registry: PecRegistry
    markers: list[tuple[NodeAddr, tuple[int, ...]]] = field(default_factory=list)
    ids: IdSource = field(default_factory=IdSource)

    @property
    def g_star_ids(self) -> set[int]:
        return self.registry.copy_ids()

    @property
    def g_ids(self) -> set[int]:
        return set(self.tau_star.conclusion.ids) - self.g_star_ids

    def stages(self) -> list[tuple[str, Derivation]]:
        return [
            ("tau", self.tau),
            ("tau1", self.tau1),
            ("tau2", self.tau2),
            ("tau3", self.tau3),
            ("tau4", self.tau4),
            ("tau_star", self.tau_star),
        ]


# ---------------------------------------------------------------------- step 1


def step1_generalize_branching(tau: Derivation, ids: IdSource) -> Derivation:
    """Replace and_r / or_l by the generalized rules plus one EC."""
    b = DerivationBuilder(ids)

    def go(node: Derivation) -> Derivation:
        if node.rule in (Rule.CUT, Rule.D):
            raise PipelineError("step1", f"input proof uses {node.rule}")
        if not node.premises:
            return node
        premises = tuple(go(p) for p in node.premises)
        if node.rule not in (Rule.AND_R, Rule.OR_L):
            return replace(node, premises=premises)
        pid = node.principal[0].cid
        s = node.conclusion[pid]
        rule = Rule.AND_RW if node.rule is Rule.AND_R else Rule.OR_LW
        extra = ids.component()
        wide = b.apply(rule, list(premises), node.focus, [s, s], ns=(1, 2), pids=[pid, extra])
        return b.ec(wide, pid, extra)

    return go(tau)


# ---------------------------------------------------------------------- step 2


def step2_eliminate_ec(tau1: Derivation) -> Derivation:
    """Turn every maximal EC chain into ID_Ω and insert the surplus copies below."""
    chains = {c.node: c for c in detect_full_ec(tau1)}

    def go(addr: NodeAddr, node: Derivation) -> tuple[Derivation, list[tuple[int, Sequent]]]:
        if addr in chains:
            chain = chains[addr]
            top, extras = go(chain.top, tau1.node(chain.top))
            kept = node.principal[0].cid
            if kept not in chain.ids:
                raise PipelineError("step2", f"contraction at {list(addr)} does not keep one of its copies")
            surplus = [(c, top.conclusion[c]) for c in chain.ids if c != kept]
            log.trace("Replaced {} contractions of {} by ID_omega", chain.multiplicity - 1, chain.sequent)
            return Derivation(Rule.ID_OMEGA, top.conclusion, (top,), pec=chain.ids), extras + surplus
        if not node.premises:
            return node, []
        done = [go(addr + (i,), p) for i, p in enumerate(node.premises)]
        extras = [x for _, ex in done for x in ex]
        conclusion = node.conclusion.plus(extras)
        return replace(node, conclusion=conclusion, premises=tuple(p for p, _ in done)), extras

    return go((), tau1)[0]


# ---------------------------------------------------------------------- step 3


def step3_eliminate_ew(tau2: Derivation) -> Derivation:
    """Prune EW: keep each rule only when its focus survived above it."""

    def go(node: Derivation) -> tuple[Derivation, set[int]]:
        if not node.premises:
            return node, set(node.conclusion.ids)
        if node.rule is Rule.EW:
            return go(node.premises[0])
        done = [go(p) for p in node.premises]
        if node.rule is Rule.ID_OMEGA:
            sub, kept = done[0]
            pec = tuple(c for c in node.pec if c in kept)
            return Derivation(Rule.ID_OMEGA, sub.conclusion, (sub,), pec=pec), kept
        layout = focus_layout(node.rule)
        for c, k in zip(node.focus, layout):
            if c not in done[k][1]:
                return done[k]
        removed = [set() for _ in done]
        for c, k in zip(node.focus, layout):
            removed[k].add(c)
        sides = [(c, s) for k, (p, _) in enumerate(done) for c, s in p.conclusion if c not in removed[k]]
        principals = [(p.cid, node.conclusion[p.cid]) for p in node.principal]
        conclusion = Hypersequent(tuple(sides) + tuple(principals))
        new = replace(node, conclusion=conclusion, premises=tuple(p for p, _ in done))
        return new, set(conclusion.ids)

    return go(tau2)[0]


# ------------------------------------------------------------ label propagation


def _with_labels(s: Sequent, left: list[int], right: list[int]) -> Sequent:
    if len(left) != len(s.v_left()) or len(right) != len(s.v_right()):
        raise InvariantViolation("labeling", f"cannot place {len(left)}/{len(right)} labels into {s}")
    return Sequent(
        s.left.without_eigens() + [Eigen(k) for k in left],
        s.right.without_eigens() + [Eigen(k) for k in right],
    )


def propagate_labels(
    d: Derivation,
    leaf_labels: Callable[[Derivation], Hypersequent],
    fresh: Callable[[], int],
) -> Derivation:
    """Label every eigenvariable occurrence from the leaves down.

    Side components keep their labels. A one-premise rule's principal takes
    the focus labels; a weakening formula ``p`` gets ``fresh()``. Two-premise
    rules take the union of both foci, except and_rw / or_lw (side by side)
    and COM, which hands the sorted labels to its first principal first.
    """

    def go(node: Derivation) -> Derivation:
        if not node.premises:
            return replace(node, conclusion=leaf_labels(node))
        premises = tuple(go(p) for p in node.premises)
        if node.rule is Rule.ID_OMEGA:
            return replace(node, conclusion=premises[0].conclusion, premises=premises)
        layout = focus_layout(node.rule)
        removed = [set() for _ in premises]
        for c, k in zip(node.focus, layout):
            removed[k].add(c)
        sides = [(c, s) for k, p in enumerate(premises) for c, s in p.conclusion if c not in removed[k]]
        focus = [premises[k].conclusion[c] for c, k in zip(node.focus, layout)]
        ordered = sorted(node.principal, key=lambda p: p.n)
        unlabeled = [node.conclusion[p.cid] for p in ordered]
        if node.rule in (Rule.AND_RW, Rule.OR_LW):
            labeled = [_with_labels(u, f.v_left(), f.v_right()) for u, f in zip(unlabeled, focus)]
        elif node.rule is Rule.COM:
            left = sorted(focus[0].v_left() + focus[1].v_left())
            right = sorted(focus[0].v_right() + focus[1].v_right())
            p1, p2 = unlabeled
            n_l, n_r = len(p1.v_left()), len(p1.v_right())
            labeled = [
                _with_labels(p1, left[:n_l], right[:n_r]),
                _with_labels(p2, left[n_l:], right[n_r:]),
            ]
        else:
            left = [k for f in focus for k in f.v_left()]
            right = [k for f in focus for k in f.v_right()]
            u = unlabeled[0]
            left += [fresh() for _ in range(len(u.v_left()) - len(left))]
            right += [fresh() for _ in range(len(u.v_right()) - len(right))]
            labeled = [_with_labels(u, left, right)]
        principals = [(p.cid, s) for p, s in zip(ordered, labeled)]
        return replace(node, conclusion=Hypersequent(tuple(sides) + tuple(principals)), premises=premises)

    return go(d)


def _is_eigen_axiom(node: Derivation) -> bool:
    if node.rule is not Rule.ID:
        return False
    s = node.conclusion.sequents[0]
    return len(s.left) == 1 and isinstance(s.left.items[0], Eigen)


# ---------------------------------------------------------------------- step 4


def step4_replace_degenerate_eigens(tau3: Derivation) -> Derivation:
    """Replace eigenvariables born in ⊤/⊥ leaves or weakenings by ⊤ / ⊥."""
    counter = itertools.count(1)
    degenerate: set[int] = set()

    def fresh() -> int:
        k = next(counter)
        degenerate.add(k)
        return k

    def leaves(node: Derivation) -> Hypersequent:
        (cid, s) = node.conclusion.components[0]
        if _is_eigen_axiom(node):
            k = next(counter)
            return Hypersequent(((cid, Sequent.of((Eigen(k),), (Eigen(k),))),))
        return Hypersequent(((cid, _with_labels(s, [fresh() for _ in s.v_left()], [fresh() for _ in s.v_right()])),))

    labeled = propagate_labels(tau3, leaves, fresh)
    if not degenerate:
        return tau3

    def substitute(s: Sequent) -> Sequent:
        left = [TOP if isinstance(a, Eigen) and a.id in degenerate else (Eigen(0) if isinstance(a, Eigen) else a) for a in s.left]
        right = [BOT if isinstance(a, Eigen) and a.id in degenerate else (Eigen(0) if isinstance(a, Eigen) else a) for a in s.right]
        return Sequent.of(left, right)

    log.debug("Replaced {} by top/bot", _p.no("degenerate eigenvariable occurrence", len(degenerate)))
    return map_sequents(labeled, substitute)


# ---------------------------------------------------------------------- step 5


def _flatten(d: Derivation) -> tuple[Derivation, list[tuple[NodeAddr, tuple[int, ...]]]]:
    markers: list[tuple[NodeAddr, tuple[int, ...]]] = []

    def go(addr: NodeAddr, node: Derivation) -> Derivation:
        while node.rule is Rule.ID_OMEGA:
            if node.pec:
                markers.append((addr, node.pec))
            node = node.premises[0]
        if not node.premises:
            return node
        return replace(node, premises=tuple(go(addr + (i,), p) for i, p in enumerate(node.premises)))

    return go((), d), markers


def build_registry(tau_star: Derivation, markers: list[tuple[NodeAddr, tuple[int, ...]]]) -> PecRegistry:
    """Locate each pseudo-contraction node below its flattened marker."""
    found: list[dict] = []
    for marker, pec in markers:
        pec_set = set(pec)
        x = marker
        hit: Optional[tuple[NodeAddr, int]] = None
        while x:
            parent = tau_star.node(x[:-1])
            k = x[-1]
            used = [c for c, owner in zip(parent.focus, focus_layout(parent.rule)) if owner == k and c in pec_set]
            if used:
                hit = (x, used[0])
                break
            x = x[:-1]
        if hit is None:
            present = [c for c in pec if c in tau_star.conclusion]
            if len(present) >= 2:
                found.append({"node": None, "focus": None, "copies": tuple(present), "marker": marker, "degenerate": True})
            continue
        node_addr, focus = hit
        present = [c for c in pec if c in tau_star.node(node_addr).conclusion]
        if len(present) < 2:
            continue
        copies = tuple(c for c in present if c != focus)
        found.append({"node": node_addr, "focus": focus, "copies": copies, "marker": marker, "degenerate": False})

    def order(entry: dict) -> tuple:
        if entry["node"] is None:
            return (1, ())
        return (0, tuple(entry["node"]) + (2,))

    found.sort(key=order)
    return PecRegistry(entries=[PecEntry(index=i + 1, **e) for i, e in enumerate(found)])


def step5_label(tau4: Derivation) -> tuple[Derivation, PecRegistry, list[tuple[NodeAddr, tuple[int, ...]]]]:
    """Number the ``p => p`` leaves in preorder and propagate ids down."""
    counter = itertools.count(1)

    def fresh() -> int:
        raise InvariantViolation("step5", "an eigenvariable is introduced outside an identity leaf")

    def leaves(node: Derivation) -> Hypersequent:
        (cid, s) = node.conclusion.components[0]
        if _is_eigen_axiom(node):
            k = next(counter)
            return Hypersequent(((cid, Sequent.of((Eigen(k),), (Eigen(k),))),))
        if s.has_eigen():
            raise InvariantViolation("step5", f"leaf {s} still carries an eigenvariable")
        return node.conclusion

    labeled = propagate_labels(tau4, leaves, fresh)
    tau_star, markers = _flatten(labeled)
    return tau_star, build_registry(tau_star, markers), markers


# -------------------------------------------------------------------- pipeline


def _check_stage(stage: str, system: SystemId, d: Derivation) -> None:
    violation = check_proof(system, d)
    if violation is not None:
        raise PipelineError(stage, str(violation)) from violation


def preprocess(system: SystemId, tau: Derivation, ids: Optional[IdSource] = None, assert_lemmas: bool = False) -> PipelineTrace:
    """Run the five stages on a cut-free proof and return every intermediate tree."""
    base = system.as_base()
    _check_stage("input", base, tau)
    ids = ids or IdSource()
    tau = normalize_ids(strip_labels(tau), ids)
    tau1 = step1_generalize_branching(tau, ids)
    _check_stage("step1", base, tau1)
    tau2 = step2_eliminate_ec(tau1)
    _check_stage("step2", base, tau2)
    tau3 = step3_eliminate_ew(tau2)
    _check_stage("step3", base, tau3)
    tau4 = step4_replace_degenerate_eigens(tau3)
    _check_stage("step4", base, tau4)
    tau_star, registry, markers = step5_label(tau4)
    _check_stage("step5", base.as_omega(), tau_star)
    if assert_lemmas:
        problems = check_labeling(tau_star)
        if problems:
            raise InvariantViolation("labeling", "; ".join(problems))
    ids.reserve(max(eigen_ids(tau_star), default=0), max(component_ids(tau_star), default=0))
    log.debug(
        "Preprocessed proof of {}: registry has {}",
        canonical_text(tau.conclusion),
        _p.no("entry", len(registry.active())),
        details={"root": canonical_text(tau_star.conclusion)},
    )
    return PipelineTrace(base, tau, tau1, tau2, tau3, tau4, tau_star, registry, markers, ids)


def stage_report(trace: PipelineTrace) -> str:
    """Human-readable summary of every stage."""
    lines = [f"system: {trace.system}"]
    for name, d in trace.stages():
        stats = proof_stats(d)
        rules = ", ".join(f"{r}={n}" for r, n in stats["rules"].items())
        lines.append(f"{name}: size={stats['size']} height={stats['height']}")
        lines.append(f"  root: {canonical_text(d.conclusion)}")
        lines.append(f"  rules: {rules}")
    root = trace.tau_star.conclusion
    lines.append(f"G: {canonical_text(root.restrict(trace.g_ids))}")
    lines.append(f"G*: {canonical_text(root.restrict(trace.g_star_ids))}")
    for entry in trace.registry.entries:
        if entry.degenerate:
            lines.append(f"H{entry.index}: degenerate, copies {canonical_text(root.restrict(entry.copies))}")
            continue
        node = trace.tau_star.node(entry.node)
        lines.append(
            f"H{entry.index} at {list(entry.node)}: {canonical_text(node.conclusion)}"
            f"; focus {node.conclusion[entry.focus]}"
            f"; copies {canonical_text(node.conclusion.restrict(entry.copies))}"
        )
    return "\n".join(lines) + "\n"
