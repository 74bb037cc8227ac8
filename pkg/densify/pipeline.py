"""Density elimination end to end.

From a cut-free proof of a density premise ``G_0`` the pipeline builds a
proof of the density conclusion ``d0(G_0)`` without the density rule:

1. preprocess the proof into a labeled proof of ``G | G*``;
2. separate until no copy of a registry entry is left;
3. close the open leaves of the separation with copies of the labeled proof;
4. translate the labeled proof with the generalized density rule;
5. repair the translated conclusion into ``d0(G_0)``.
"""

from typing import Optional
from collections import Counter
from dataclasses import dataclass, field

import inflect
from loguru import logger as log

from .builder import DerivationBuilder, component_ids, eigen_ids, expand_generalized, graft_onto
from .calculus import Derivation, Rule, SystemId, check_proof
from .config import Settings
from .density import CaseNote, ProofTranslator
from .errors import EigenPlacementError, GoalShapeError, InvariantViolation, PipelineError
from .preprocess import PipelineTrace, preprocess
from .separation import Branch, SeparationContext, eliminate_copies
from .syntax import BOT, P, TOP, Eigen, Formula, Hypersequent, IdSource, Sequent, contains_eigen, parse_hypersequent

_p = inflect.engine()


@dataclass(frozen=True)
class DensityGoal:
    """``G' | Γ_1, p => Δ_1 | ... | Π_1 => p, Σ_1 | ...`` with p fresh for the rest.

    ``left`` holds the ``Γ_i => Δ_i`` and ``right`` the ``Π_j => Σ_j``,
    p removed.
    """

    context: tuple[Sequent, ...]
    left: tuple[Sequent, ...]
    right: tuple[Sequent, ...]

    @property
    def n(self) -> int:
        return len(self.left)

    @property
    def m(self) -> int:
        return len(self.right)

    @classmethod
    def from_hypersequent(cls, g: Hypersequent) -> "DensityGoal":
        context, left, right = [], [], []
        for cid, s in g:
            if any(contains_eigen(a) and not isinstance(a, Eigen) for a in s.formulas()):
                raise GoalShapeError(f"p occurs inside a compound formula of component {cid}: {s}")
            if any(isinstance(a, Eigen) and a != P for a in s.formulas()):
                raise GoalShapeError(f"component {cid} carries a labeled eigenvariable: {s}")
            n_left, n_right = s.left.count(P), s.right.count(P)
            if n_left == 0 and n_right == 0:
                context.append(s)
            elif n_left == 1 and n_right == 0:
                left.append(Sequent(s.left - [P], s.right))
            elif n_left == 0 and n_right == 1:
                right.append(Sequent(s.left, s.right - [P]))
            else:
                raise GoalShapeError(
                    f"component {cid} has p {n_left} times on the left and {n_right} times on the right; "
                    "each component may carry p at most once"
                )
        if not left or not right:
            raise GoalShapeError(f"{g} needs p on the left of some component and on the right of another")
        return cls(tuple(context), tuple(left), tuple(right))

    @classmethod
    def parse(cls, text: str) -> "DensityGoal":
        try:
            g = parse_hypersequent(text)
        except EigenPlacementError as e:
            raise GoalShapeError(f"p occurs inside a compound formula: {e}") from e
        return cls.from_hypersequent(g)

    @property
    def hypersequent(self) -> Hypersequent:
        left = [Sequent(s.left + [P], s.right) for s in self.left]
        right = [Sequent(s.left, s.right + [P]) for s in self.right]
        return Hypersequent.of(list(self.context) + left + right)

    def combined(self, i: int, j: int) -> Sequent:
        gamma, pi = self.left[i], self.right[j]
        return Sequent(gamma.left + pi.left, gamma.right + pi.right)


def d0(goal: DensityGoal) -> Hypersequent:
    """The density conclusion: ``G'`` and every ``Γ_i, Π_j => Δ_i, Σ_j``."""
    combined = [goal.combined(i, j) for i in range(goal.n) for j in range(goal.m)]
    return Hypersequent.of(list(goal.context) + combined)


@dataclass
class RepairNote:
    kind: str
    sequent: str


@dataclass
class DensityRun:
    """Everything one run of the pipeline produced."""

    system: SystemId
    goal: DensityGoal
    trace: PipelineTrace
    branch: Branch
    labeled: Derivation
    translated: Derivation
    proof: Derivation
    cases: list[CaseNote] = field(default_factory=list)
    repairs: list[RepairNote] = field(default_factory=list)

    def stages(self) -> list[tuple[str, Derivation]]:
        return self.trace.stages() + [
            ("separated", self.branch.derivation),
            ("labeled", self.labeled),
            ("translated", self.translated),
            ("proof", self.proof),
        ]


def _degenerate_partner(goal: DensityGoal, s: Sequent, missing: Counter) -> Optional[tuple[Rule, Sequent, Formula]]:
    """The leaf that cuts a ⊤/⊥ stand-in for p back into a combined component."""
    if TOP in s.left:
        rest = Sequent(s.left - [TOP], s.right)
        if rest in goal.left:
            i = goal.left.index(rest)
            js = sorted(range(goal.m), key=lambda j: missing[goal.combined(i, j)] == 0)
            pi = goal.right[js[0]]
            return Rule.TOP_R, Sequent(pi.left, pi.right + [TOP]), TOP
    if BOT in s.right:
        rest = Sequent(s.left, s.right - [BOT])
        if rest in goal.right:
            j = goal.right.index(rest)
            is_ = sorted(range(goal.n), key=lambda i: missing[goal.combined(i, j)] == 0)
            gamma = goal.left[is_[0]]
            return Rule.BOT_L, Sequent(gamma.left + [BOT], gamma.right), BOT
    return None


def repair(d: Derivation, goal: DensityGoal, ids: IdSource) -> tuple[Derivation, list[RepairNote]]:
    """Turn a proof of the translated conclusion into one of ``d0(goal)``.

    Stand-ins ``Γ_i, ⊤ => Δ_i`` and ``Π_j => ⊥, Σ_j`` are cut against a
    ⊤/⊥ leaf, surplus duplicates are contracted and missing components are
    weakened in.
    """
    ids.reserve(max(eigen_ids(d), default=0), max(component_ids(d), default=0))
    b = DerivationBuilder(ids)
    target = Counter(d0(goal).sequents)
    notes: list[RepairNote] = []

    for cid, s in list(d.conclusion):
        if s in target:
            continue
        missing = target - Counter(d.conclusion.sequents)
        partner = _degenerate_partner(goal, s, missing)
        if partner is None:
            raise InvariantViolation("repair", f"{s} is neither part of the density conclusion nor a stand-in for one")
        rule, leaf_sequent, constant = partner
        leaf = b.leaf(rule, leaf_sequent)
        d = b.cut(d, cid, leaf, leaf.conclusion.ids[0], constant)
        notes.append(RepairNote("cut", str(s)))

    by_sequent: dict[Sequent, list[int]] = {}
    for cid, s in d.conclusion:
        by_sequent.setdefault(s, []).append(cid)
    for s, cids in by_sequent.items():
        for removed in cids[target[s]:]:
            d = b.ec(d, cids[0], removed)
            notes.append(RepairNote("contract", str(s)))

    for s, k in (target - Counter(d.conclusion.sequents)).items():
        for _ in range(k):
            d = b.ew(d, s)
            notes.append(RepairNote("weaken", str(s)))
    return d, notes


def _verify(stage: str, system: SystemId, d: Derivation) -> None:
    violation = check_proof(system, d)
    if violation is not None:
        raise PipelineError(stage, str(violation)) from violation


def run_pipeline(
    system: SystemId,
    tau: Derivation,
    settings: Optional[Settings] = None,
    ids: Optional[IdSource] = None,
) -> DensityRun:
    """Eliminate the density rule from a cut-free proof of a density premise.

    Every stage is checked as it is produced; a stage that fails its check
    raises ``PipelineError`` naming the stage. The proof returned in the run
    concludes exactly ``d0`` of the input goal.

    :param system: The system ``tau`` is a proof in; its labeled subsystem is
        used for the separation.
    :type system: SystemId
    :param tau: A cut-free proof of a density premise.
    :type tau: Derivation
    :param settings: Budgets and switches; defaults when omitted.
    :type settings: Optional[Settings]
    :param ids: Source of fresh ids shared by every stage.
    :type ids: Optional[IdSource]
    :return: All intermediate trees, the case notes of the translation and
        the repairs applied to its conclusion.
    :rtype: DensityRun
    :raises GoalShapeError: If the conclusion of ``tau`` is no density premise.
    :raises InvariantViolation: If the result does not conclude ``d0``.
    """
    settings = settings or Settings()
    base = system.as_base()
    goal = DensityGoal.from_hypersequent(tau.conclusion)
    ids = ids or IdSource()

    trace = preprocess(base, tau, ids, settings.assert_lemmas)
    log.debug(
        "Preprocessed a proof of size {} into one with {}",
        tau.size,
        _p.no("active pseudo-contraction", len(trace.registry.active())),
    )

    ctx = SeparationContext.from_trace(trace, settings)
    branch = eliminate_copies(ctx)
    labeled = graft_onto(branch.derivation, trace.tau_star, ids)
    _verify("separation", base.as_omega(), labeled)
    log.debug("Separated into {}", branch.conclusion)

    translator = ProofTranslator(ids)
    translated = translator.translate(labeled)
    _verify("translation", base, translated)

    proof, repairs = repair(translated, goal, ids)
    if settings.pure_gl:
        proof = expand_generalized(proof, ids)
    _verify("result", base, proof)
    expected = d0(goal)
    if not proof.conclusion.same_multiset(expected):
        raise InvariantViolation("result", f"proved {proof.conclusion}, expected {expected}")
    log.debug(
        "Density eliminated: proof of size {} after {}",
        proof.size,
        _p.no("repair", len(repairs)),
    )
    return DensityRun(base, goal, trace, branch, labeled, translated, proof, translator.notes, repairs)


def eliminate_density(system: SystemId, tau: Derivation, settings: Optional[Settings] = None) -> Derivation:
    """A density-free proof of ``d0(G_0)`` from a cut-free proof ``tau`` of ``G_0``."""
    return run_pipeline(system, tau, settings).proof
