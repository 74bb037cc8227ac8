"""Random closed hypersequents and random labeled proofs.

Proofs are grown forwards: a pool starts with initial sequents and every
round applies a random rule to random pool members. Only applications that
pass the labeled checker are kept, so everything returned is a proof of
the labeled subsystem.
"""

from typing import Callable, Optional
from dataclasses import dataclass, field
import random

import inflect
from loguru import logger as log

from .builder import DerivationBuilder, refresh_ids
from .calculus import Derivation, Rule, SystemId, check_node, check_proof
from .config import SearchBudget
from .density import d_rule, translate_proof
from .errors import DensifyError
from .pipeline import DensityGoal, d0, run_pipeline
from .prover import prove
from .separation import duplicated_closures
from .syntax import (
    BOT,
    F,
    T,
    TOP,
    Atom,
    Bin,
    Connective,
    Eigen,
    Formula,
    Hypersequent,
    IdSource,
    Sequent,
)

_p = inflect.engine()

ATOMS = (Atom("a"), Atom("b"))
CONSTANTS = (T, F, TOP, BOT)


def random_formula(rng: random.Random, depth: int = 2, atoms: tuple = ATOMS) -> Formula:
    if depth == 0 or rng.random() < 0.4:
        return rng.choice(atoms + CONSTANTS)
    op = rng.choice(list(Connective))
    return Bin(op, random_formula(rng, depth - 1, atoms), random_formula(rng, depth - 1, atoms))


def random_closed_hypersequent(
    rng: random.Random,
    ids: Optional[IdSource] = None,
    max_components: int = 4,
    max_eigens: int = 4,
    max_formulas: int = 2,
) -> Hypersequent:
    """Every eigen id is placed once on a left and once on a right side."""
    ids = ids or IdSource()
    n = rng.randint(1, max_components)
    sides: list[tuple[list, list]] = [([], []) for _ in range(n)]
    for _ in range(rng.randint(0, max_eigens)):
        k = ids.eigen()
        sides[rng.randrange(n)][0].append(Eigen(k))
        sides[rng.randrange(n)][1].append(Eigen(k))
    for left, right in sides:
        left.extend(random_formula(rng, 1) for _ in range(rng.randint(0, max_formulas)))
        right.extend(random_formula(rng, 1) for _ in range(rng.randint(0, max_formulas)))
    return Hypersequent.of([Sequent.of(left, right) for left, right in sides])


def _plain(bag) -> list[Formula]:
    return [a for a in bag.distinct() if not isinstance(a, Eigen)]


class ProofGrower:
    """Grow labeled proofs by random forward rule applications."""

    def __init__(self, rng: random.Random, system: SystemId, ids: Optional[IdSource] = None):
        self.rng = rng
        self.system = system.as_omega()
        self.ids = ids or IdSource()
        self.b = DerivationBuilder(self.ids)

    def leaf(self) -> Derivation:
        rng = self.rng
        choice = rng.randrange(6)
        if choice < 2:
            k = self.ids.eigen()
            return self.b.leaf(Rule.ID, Sequent.of((Eigen(k),), (Eigen(k),)))
        if choice == 2:
            return self.b.axiom(rng.choice(ATOMS))
        if choice == 3:
            if rng.random() < 0.5:
                return self.b.leaf(Rule.T_R, Sequent.of((), (T,)))
            return self.b.leaf(Rule.F_L, Sequent.of((F,), ()))
        if choice == 4:
            return self.b.leaf(Rule.TOP_R, Sequent.of((random_formula(rng, 1),), (TOP,)))
        return self.b.leaf(Rule.BOT_L, Sequent.of((BOT,), (random_formula(rng, 1),)))

    def one_premise(self, d: Derivation) -> Optional[Derivation]:
        rng, b = self.rng, self.b
        cid = rng.choice(d.conclusion.ids)
        s = d.conclusion[cid]
        left, right = _plain(s.left), _plain(s.right)
        moves: list[Callable[[], Derivation]] = [lambda: b.t_l(d, cid), lambda: b.f_r(d, cid)]
        if left and right:
            moves.append(lambda: b.imp_r(d, cid, rng.choice(left), rng.choice(right)))
        if len([a for a in s.left if not isinstance(a, Eigen)]) >= 2:
            pair = rng.sample([a for a in s.left if not isinstance(a, Eigen)], 2)
            moves.append(lambda: b.fus_l(d, cid, pair[0], pair[1]))
        if left:
            moves.append(lambda: b.and_lr(d, cid, rng.choice(left), random_formula(rng, 1)))
            moves.append(lambda: b.and_ll(d, cid, random_formula(rng, 1), rng.choice(left)))
        if right:
            moves.append(lambda: b.or_rr(d, cid, rng.choice(right), random_formula(rng, 1)))
            moves.append(lambda: b.or_rl(d, cid, random_formula(rng, 1), rng.choice(right)))
        if self.system.weakening:
            moves.append(lambda: b.wl(d, cid, random_formula(rng, 1)))
            moves.append(lambda: b.wr(d, cid, random_formula(rng, 1)))
        return rng.choice(moves)()

    def two_premise(self, d0: Derivation, d1: Derivation) -> Optional[Derivation]:
        rng, b = self.rng, self.b
        d1, _, _ = refresh_ids(d1, self.ids, eigen=True)
        c0, c1 = rng.choice(d0.conclusion.ids), rng.choice(d1.conclusion.ids)
        f0, f1 = d0.conclusion[c0], d1.conclusion[c1]
        moves: list[Callable[[], Derivation]] = []
        if _plain(f0.right) and _plain(f1.left):
            moves.append(lambda: b.imp_l(d0, c0, d1, c1, rng.choice(_plain(f0.right)), rng.choice(_plain(f1.left))))
        if _plain(f0.right) and _plain(f1.right):
            a, c = rng.choice(_plain(f0.right)), rng.choice(_plain(f1.right))
            moves.append(lambda: b.fus_r(d0, c0, d1, c1, a, c))
            moves.append(lambda: b.and_rw(d0, c0, d1, c1, a, c))
        if _plain(f0.left) and _plain(f1.left):
            moves.append(lambda: b.or_lw(d0, c0, d1, c1, rng.choice(_plain(f0.left)), rng.choice(_plain(f1.left))))

        def com() -> Derivation:
            left = [a for a in f0.left + f1.left if rng.random() < 0.5]
            right = [a for a in f0.right + f1.right if rng.random() < 0.5]
            return b.com(d0, c0, d1, c1, Sequent.of(left, right))

        moves.extend([com, com])
        return rng.choice(moves)()

    def contract(self, d: Derivation) -> Derivation:
        copies = duplicated_closures(d.conclusion)
        if copies and self.rng.random() < 0.7:
            return self.b.ec_omega(d, copies, star=True)
        return d

    def admissible(self, d: Optional[Derivation]) -> bool:
        if d is None:
            return False
        try:
            check_node(self.system, d)
        except DensifyError:
            return False
        return True

    def grow(self, steps: int = 8) -> Derivation:
        pool = [self.leaf() for _ in range(3)]
        for _ in range(steps):
            roll = self.rng.random()
            try:
                if roll < 0.4:
                    candidate = self.one_premise(self.rng.choice(pool))
                elif roll < 0.85:
                    candidate = self.two_premise(self.rng.choice(pool), self.rng.choice(pool))
                else:
                    candidate = self.leaf()
            except (DensifyError, KeyError, IndexError, ValueError):
                candidate = None
            if self.admissible(candidate):
                contracted = self.contract(candidate)
                pool.append(contracted if self.admissible(contracted) else candidate)
        return max(pool, key=lambda d: (d.size, -d.height))


def random_labeled_proof(
    rng: random.Random, system: SystemId, steps: int = 8, ids: Optional[IdSource] = None
) -> Derivation:
    return ProofGrower(rng, system, ids).grow(steps)


@dataclass
class FuzzFailure:
    index: int
    proof: Derivation
    reason: str


def fuzz_translation(seed: int, count: int, system: SystemId, steps: int = 8) -> list[FuzzFailure]:
    """Translate ``count`` random labeled proofs; collect the ones that do not check."""
    rng = random.Random(seed)
    base = system.as_base()
    failures = []
    for k in range(count):
        d = random_labeled_proof(rng, system, steps)
        try:
            out = translate_proof(d)
            violation = check_proof(base, out)
            if violation is not None:
                failures.append(FuzzFailure(k, d, str(violation)))
            elif out.conclusion != d_rule(d.conclusion):
                failures.append(FuzzFailure(k, d, f"concludes {out.conclusion}"))
        except DensifyError as e:
            failures.append(FuzzFailure(k, d, str(e)))
    log.debug(
        "Translated {} in {}: {}",
        _p.no("random proof", count),
        system,
        _p.no("failure", len(failures)),
    )
    return failures


def random_density_goal(rng: random.Random, system: SystemId, max_side: int = 2, depth: int = 2) -> DensityGoal:
    """A density premise over ``ATOMS`` with at most ``max_side`` components on either side of p.

    Half of the goals echo one formula through p (``p => X | X => p``) so
    that a fair share of them is provable; the other components are random.
    """

    def around() -> list[Formula]:
        return [random_formula(rng, depth) for _ in range(rng.randint(0, 1))]

    n, m = rng.randint(1, max_side), rng.randint(1, max_side)
    left = [Sequent.of(around(), around()) for _ in range(n)]
    right = [Sequent.of(around(), [] if system.single_conclusion else around()) for _ in range(m)]
    if rng.random() < 0.5:
        x = random_formula(rng, depth)
        left[0], right[0] = Sequent.of((), (x,)), Sequent.of((x,), ())
    return DensityGoal((), tuple(left), tuple(right))


@dataclass
class SweepReport:
    """Outcome of ``admissibility_sweep`` in one system.

    :param system: The base system swept.
    :type system: SystemId
    :param tried: Goals generated.
    :type tried: int
    :param proved: Goals the prover found a proof of.
    :type proved: int
    :param confirmed: Density conclusions the prover re-proved on its own.
    :type confirmed: int
    :param failures: Proved goals the pipeline could not eliminate density from,
        or whose density conclusion the direct search did not prove.
    :type failures: list[FuzzFailure]
    """

    system: SystemId
    tried: int = 0
    proved: int = 0
    confirmed: int = 0
    failures: list[FuzzFailure] = field(default_factory=list)


def admissibility_sweep(
    seed: int,
    count: int,
    system: SystemId,
    budget: SearchBudget = SearchBudget(depth=6),
    confirm_depth: int = 14,
) -> SweepReport:
    """Prove random density premises and eliminate density from every proof found.

    Each density conclusion is also searched for directly, up to
    ``confirm_depth``, as a check that does not go through the pipeline.
    """
    rng = random.Random(seed)
    base = system.as_base()
    report = SweepReport(base)
    for k in range(count):
        goal = random_density_goal(rng, base)
        report.tried += 1
        tau = prove(base, goal.hypersequent, budget)
        if tau is None:
            continue
        report.proved += 1
        expected = d0(goal)
        direct = prove(base, expected, budget.widened(confirm_depth))
        if direct is not None:
            report.confirmed += 1
        try:
            run_pipeline(base, tau)
        except DensifyError as e:
            found = "provable" if direct is not None else "not found directly"
            report.failures.append(FuzzFailure(k, tau, f"{type(e).__name__}: {e} ({expected} {found})"))
            continue
        if direct is None:
            report.failures.append(FuzzFailure(k, tau, f"{expected} not found by a direct search to depth {confirm_depth}"))
    log.debug(
        "Swept {} in {}: {} proved, {} confirmed, {}",
        _p.no("density premise", report.tried),
        base,
        report.proved,
        report.confirmed,
        _p.no("failure", len(report.failures)),
    )
    return report
