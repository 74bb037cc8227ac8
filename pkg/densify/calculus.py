"""Rule schemas, derivation trees, the proof checker and tree order.

A :class:`Derivation` is an annotated tree. Every non-leaf node names the
component ids of its focus sequents in the premises (``focus``) and the
component ids of its principal sequents in the conclusion (``principal``).
The checker never guesses an instantiation; it validates the annotated
instance against the rule schema using multiset arithmetic, so renaming
component ids does not change its verdict.

Addresses are tuples of premise indices read from the root. The root is the
least element of the tree order: ``h1 <= h2`` iff ``h1`` is a prefix of
``h2``.
"""

from typing import Iterator, Optional
from collections import Counter
from dataclasses import dataclass, replace
import enum

from loguru import logger as log

from .errors import AddressError, RuleViolation, ShapeError, DuplicateEigenId
from .syntax import (
    Atom,
    Bag,
    Bin,
    Connective,
    Eigen,
    Hypersequent,
    Sequent,
    BOT,
    F,
    T,
    TOP,
    closure_partition_ids,
    contains_eigen,
    eigen_profile,
    is_closed,
    is_copy,
    occurs,
)

NodeAddr = tuple[int, ...]


class BaseSystem(enum.Enum):
    """The four base calculi."""

    GUL = "gul"
    GIUL = "giul"
    GMTL = "gmtl"
    GIMTL = "gimtl"

    def __str__(self):
        return self.value

    def __repr__(self):
        return f"BaseSystem.{self.name}"


@dataclass(frozen=True)
class SystemId:
    """A base calculus, optionally restricted to its labeled subsystem."""

    base: BaseSystem
    omega: bool = False

    @classmethod
    def from_value(cls, value: str) -> "SystemId":
        """Parse ``giul`` or ``giul-omega`` (case-insensitive)."""
        text = value.strip().lower()
        omega = False
        for suffix in ("-omega", "_omega", "Ω", "-ω"):
            if text.endswith(suffix.lower()):
                omega = True
                text = text[: -len(suffix)]
                break
        try:
            return cls(BaseSystem(text), omega)
        except ValueError as e:
            raise ValueError(f"Invalid system: {value}") from e

    @property
    def single_conclusion(self) -> bool:
        return self.base in (BaseSystem.GUL, BaseSystem.GMTL)

    @property
    def weakening(self) -> bool:
        return self.base in (BaseSystem.GMTL, BaseSystem.GIMTL)

    def as_omega(self) -> "SystemId":
        return SystemId(self.base, True)

    def as_base(self) -> "SystemId":
        return SystemId(self.base, False)

    def __str__(self):
        return f"{self.base.value}-omega" if self.omega else self.base.value


class Rule(enum.Enum):
    """Rule tags. ``OPEN`` marks a hypothesis leaf of a derivation fragment."""

    ID = "ID"
    TOP_R = "top_r"
    BOT_L = "bot_l"
    T_R = "t_r"
    F_L = "f_l"
    OPEN = "open"
    EC = "EC"
    EW = "EW"
    COM = "COM"
    T_L = "t_l"
    F_R = "f_r"
    IMP_R = "imp_r"
    IMP_L = "imp_l"
    FUS_L = "fus_l"
    FUS_R = "fus_r"
    AND_LR = "and_lr"
    AND_LL = "and_ll"
    AND_R = "and_r"
    AND_RW = "and_rw"
    OR_RR = "or_rr"
    OR_RL = "or_rl"
    OR_L = "or_l"
    OR_LW = "or_lw"
    WL = "WL"
    WR = "WR"
    CUT = "CUT"
    D = "D"
    ID_OMEGA = "ID_omega"
    EC_OMEGA = "EC_omega"
    EC_OMEGA_STAR = "EC_omega_star"

    @classmethod
    def from_value(cls, value: str) -> "Rule":
        """Convert a rule name (ASCII tag or the usual symbolic spelling)."""
        if value in _RULE_ALIASES:
            return _RULE_ALIASES[value]
        try:
            return cls(value)
        except ValueError as e:
            raise ValueError(f"Invalid rule: {value}") from e

    @property
    def arity(self) -> int:
        return _ARITY.get(self, 1)

    @property
    def is_leaf(self) -> bool:
        return self.arity == 0

    @property
    def rule_class(self) -> Optional[str]:
        """``I`` for one-premise logical/structural rules, ``II`` for two-premise ones."""
        if self in CLASS_I:
            return "I"
        if self in CLASS_II:
            return "II"
        return None

    @property
    def two_principals(self) -> bool:
        return self in (Rule.COM, Rule.AND_RW, Rule.OR_LW)

    def __str__(self):
        return self.value

    def __repr__(self):
        return f"Rule.{self.name}"


_ARITY = {
    Rule.ID: 0,
    Rule.TOP_R: 0,
    Rule.BOT_L: 0,
    Rule.T_R: 0,
    Rule.F_L: 0,
    Rule.OPEN: 0,
    Rule.COM: 2,
    Rule.IMP_L: 2,
    Rule.FUS_R: 2,
    Rule.AND_R: 2,
    Rule.AND_RW: 2,
    Rule.OR_L: 2,
    Rule.OR_LW: 2,
    Rule.CUT: 2,
}

_RULE_ALIASES = {
    "⊤_r": Rule.TOP_R,
    "⊥_l": Rule.BOT_L,
    "→_r": Rule.IMP_R,
    "→_l": Rule.IMP_L,
    "⊙_l": Rule.FUS_L,
    "⊙_r": Rule.FUS_R,
    "∧_lr": Rule.AND_LR,
    "∧_ll": Rule.AND_LL,
    "∧_r": Rule.AND_R,
    "∧_rw": Rule.AND_RW,
    "∨_rr": Rule.OR_RR,
    "∨_rl": Rule.OR_RL,
    "∨_l": Rule.OR_L,
    "∨_lw": Rule.OR_LW,
    "ID_Ω": Rule.ID_OMEGA,
    "EC_Ω": Rule.EC_OMEGA,
    "EC_Ω*": Rule.EC_OMEGA_STAR,
}

CLASS_I = frozenset(
    {
        Rule.T_L,
        Rule.F_R,
        Rule.IMP_R,
        Rule.FUS_L,
        Rule.AND_LR,
        Rule.AND_LL,
        Rule.OR_RR,
        Rule.OR_RL,
        Rule.WL,
        Rule.WR,
    }
)
CLASS_II = frozenset({Rule.IMP_L, Rule.FUS_R, Rule.AND_R, Rule.OR_L, Rule.COM, Rule.AND_RW, Rule.OR_LW})

OMEGA_FORBIDDEN = frozenset({Rule.EW, Rule.EC, Rule.CUT, Rule.D, Rule.AND_R, Rule.OR_L})
ONLY_OMEGA = frozenset({Rule.EC_OMEGA, Rule.EC_OMEGA_STAR})


@dataclass(frozen=True)
class Principal:
    """A principal component id; ``n`` is 1/2 for the two sides of COM, ∧_rw, ∨_lw."""

    cid: int
    n: int = 0


@dataclass(frozen=True)
class Derivation:
    """An annotated derivation tree.

    Attributes
    ----------
    rule : Rule
        The rule applied at this node.
    conclusion : Hypersequent
        The node's hypersequent.
    premises : tuple[Derivation, ...]
        Sub-derivations, in rule order.
    focus : tuple[int, ...]
        Focus component ids. One per premise for one- and two-premise rules;
        ``(kept, removed)`` in premise 0 for EC; ``(left-var, right-var)``
        in premise 0 for D; empty for EW, ID_Ω and EC_Ω(*).
    principal : tuple[Principal, ...]
        Principal component ids in the conclusion.
    copies : tuple
        For EC_Ω and EC_Ω*: pairs ``(kept ids, removed ids)`` over premise 0.
    pec : tuple[int, ...]
        For ID_Ω nodes that replaced a chain of contractions: the ids of all
        copies of the contracted sequent.
    """

    rule: Rule
    conclusion: Hypersequent
    premises: tuple = ()
    focus: tuple = ()
    principal: tuple = ()
    copies: tuple = ()
    pec: tuple = ()

    @property
    def is_leaf(self) -> bool:
        return not self.premises

    @property
    def principal_ids(self) -> tuple[int, ...]:
        return tuple(p.cid for p in self.principal)

    def node(self, addr: NodeAddr) -> "Derivation":
        cur = self
        for depth, i in enumerate(addr):
            if not 0 <= i < len(cur.premises):
                raise AddressError(f"address {list(addr)} leaves the tree at depth {depth}")
            cur = cur.premises[i]
        return cur

    def walk(self) -> Iterator[tuple[NodeAddr, "Derivation"]]:
        """Preorder traversal (node before premises, premises left to right)."""
        stack: list[tuple[NodeAddr, Derivation]] = [((), self)]
        while stack:
            addr, node = stack.pop()
            yield addr, node
            for i in reversed(range(len(node.premises))):
                stack.append((addr + (i,), node.premises[i]))

    def postorder(self) -> Iterator[tuple[NodeAddr, "Derivation"]]:
        out = list(self.walk())
        order = sorted(range(len(out)), key=lambda k: _postorder_key(out[k][0]))
        for k in order:
            yield out[k]

    def replace_at(self, addr: NodeAddr, new: "Derivation") -> "Derivation":
        if not addr:
            return new
        i = addr[0]
        if not 0 <= i < len(self.premises):
            raise AddressError(f"address {list(addr)} leaves the tree")
        premises = list(self.premises)
        premises[i] = premises[i].replace_at(addr[1:], new)
        return replace(self, premises=tuple(premises))

    def open_leaves(self) -> list[tuple[NodeAddr, "Derivation"]]:
        return [(a, n) for a, n in self.walk() if n.rule is Rule.OPEN]

    @property
    def height(self) -> int:
        return max((len(a) for a, _ in self.walk()), default=0)

    @property
    def size(self) -> int:
        return sum(1 for _ in self.walk())

    def rule_counts(self) -> Counter:
        return Counter(n.rule for _, n in self.walk())

    def uses(self, rule: Rule) -> bool:
        return any(n.rule is rule for _, n in self.walk())


def _postorder_key(addr: NodeAddr) -> tuple:
    # children sort before their parent; siblings left to right
    return tuple(addr) + (2,)


# ------------------------------------------------------------------ tree order


class Relation(enum.Enum):
    LE = "<="
    GE = ">="
    PARALLEL = "||"

    def __str__(self):
        return self.value


def _validate(d: Derivation, *addrs: NodeAddr) -> None:
    for addr in addrs:
        d.node(addr)


def below(h1: NodeAddr, h2: NodeAddr) -> bool:
    """``h1 <= h2``: h1 lies on the thread of h2."""
    return len(h1) <= len(h2) and tuple(h2[: len(h1)]) == tuple(h1)


def strictly_below(h1: NodeAddr, h2: NodeAddr) -> bool:
    return len(h1) < len(h2) and below(h1, h2)


def parallel(h1: NodeAddr, h2: NodeAddr) -> bool:
    return not below(h1, h2) and not below(h2, h1)


def thread(d: Derivation, h: NodeAddr) -> list[NodeAddr]:
    """Addresses from ``h`` down to the root."""
    _validate(d, h)
    return [tuple(h[:k]) for k in range(len(h), -1, -1)]


def position(d: Derivation, h: NodeAddr) -> int:
    """Binary encoding of the right-premise choices along the thread, leading bit 1."""
    _validate(d, h)
    value = 1
    for i in h:
        value = 2 * value + (1 if i == 1 else 0)
    return value


def relate(d: Derivation, h1: NodeAddr, h2: NodeAddr) -> Relation:
    _validate(d, h1, h2)
    if below(h1, h2):
        return Relation.LE
    if below(h2, h1):
        return Relation.GE
    return Relation.PARALLEL


def common_ancestor(addrs: list[NodeAddr]) -> NodeAddr:
    prefix: list[int] = []
    for column in zip(*addrs):
        if all(c == column[0] for c in column):
            prefix.append(column[0])
        else:
            break
    return tuple(prefix)


# --------------------------------------------------------------- full contraction


@dataclass(frozen=True)
class FullContraction:
    """A maximal chain of EC steps contracting copies of one sequent.

    ``node`` is the lowest EC of the chain, ``top`` the premise of its
    topmost EC, and ``ids`` the component ids of the ``multiplicity`` copies
    in ``top``.
    """

    node: NodeAddr
    top: NodeAddr
    sequent: Sequent
    multiplicity: int
    ids: tuple[int, ...] = ()
    chain: tuple[NodeAddr, ...] = ()


def detect_full_ec(d: Derivation) -> list[FullContraction]:
    """Every maximal chain of contractions, reported at its lowest node."""
    found: list[FullContraction] = []
    inner: set[NodeAddr] = set()
    for addr, node in d.walk():
        if node.rule is not Rule.EC or addr in inner:
            continue
        kept, removed = node.focus
        s = node.premises[0].conclusion[kept]
        copies = {kept, removed}
        chain = [addr]
        cur, cur_addr = node, addr
        while True:
            upper = cur.premises[0]
            if upper.rule is not Rule.EC or not upper.principal:
                break
            pid = upper.principal[0].cid
            if pid not in cur.focus or upper.conclusion[pid] != s:
                break
            cur_addr = cur_addr + (0,)
            inner.add(cur_addr)
            chain.append(cur_addr)
            copies.discard(pid)
            copies.update(upper.focus)
            cur = upper
        found.append(
            FullContraction(addr, cur_addr + (0,), s, len(copies), tuple(sorted(copies)), tuple(chain))
        )
    return found


# --------------------------------------------------------------------- checker


def _fail(node: Derivation, addr: NodeAddr, label: str, detail: str = ""):
    raise RuleViolation(node.rule.value, addr, label, detail)


def _binaries(bag: Bag, op: Connective) -> list[Bin]:
    return [a for a in bag.distinct() if isinstance(a, Bin) and a.op is op]


def _one_premise_shape(system: SystemId, rule: Rule, f: Sequent, p: Sequent) -> Optional[str]:
    """Return None when ``f / p`` is an instance of ``rule``, else a violation label."""
    match rule:
        case Rule.T_L:
            ok = p.left == f.left + [T] and p.right == f.right
        case Rule.F_R:
            ok = p.right == f.right + [F] and p.left == f.left
        case Rule.IMP_R:
            ok = any(
                p.left + [c.left] == f.left and p.right - [c] + [c.right] == f.right
                for c in _binaries(p.right, Connective.IMP)
            )
        case Rule.FUS_L:
            ok = any(
                p.left - [c] + [c.left, c.right] == f.left and p.right == f.right
                for c in _binaries(p.left, Connective.FUSION)
            )
        case Rule.AND_LR | Rule.AND_LL:
            ok = any(
                p.left - [c] + [c.left if rule is Rule.AND_LR else c.right] == f.left and p.right == f.right
                for c in _binaries(p.left, Connective.AND)
            )
        case Rule.OR_RR | Rule.OR_RL:
            ok = any(
                p.right - [c] + [c.left if rule is Rule.OR_RR else c.right] == f.right and p.left == f.left
                for c in _binaries(p.right, Connective.OR)
            )
        case Rule.WL | Rule.WR:
            same, grown, base = (p.right, p.left, f.left) if rule is Rule.WL else (p.left, p.right, f.right)
            kept = f.right if rule is Rule.WL else f.left
            ok = same == kept and len(grown) == len(base) + 1 and base.issubset(grown)
            if ok and system.omega and any(isinstance(a, Eigen) for a in grown - base):
                return "weakening-eigen"
        case _:
            return "principal-shape"
    return None if ok else "principal-shape"


def _two_premise_shape(rule: Rule, f0: Sequent, f1: Sequent, ps: list[Sequent]) -> Optional[str]:
    match rule:
        case Rule.IMP_L:
            p = ps[0]
            ok = any(
                c.left in f0.right
                and c.right in f1.left
                and p.left - [c] == f0.left + (f1.left - [c.right])
                and p.right == (f0.right - [c.left]) + f1.right
                for c in _binaries(p.left, Connective.IMP)
            )
        case Rule.FUS_R:
            p = ps[0]
            ok = any(
                c.left in f0.right
                and c.right in f1.right
                and p.right - [c] == (f0.right - [c.left]) + (f1.right - [c.right])
                and p.left == f0.left + f1.left
                for c in _binaries(p.right, Connective.FUSION)
            )
        case Rule.AND_R:
            p = ps[0]
            ok = any(
                f0.right == p.right - [c] + [c.left]
                and f1.right == p.right - [c] + [c.right]
                and f0.left == p.left
                and f1.left == p.left
                for c in _binaries(p.right, Connective.AND)
            )
        case Rule.OR_L:
            p = ps[0]
            ok = any(
                f0.left == p.left - [c] + [c.left]
                and f1.left == p.left - [c] + [c.right]
                and f0.right == p.right
                and f1.right == p.right
                for c in _binaries(p.left, Connective.OR)
            )
        case Rule.AND_RW:
            p1, p2 = ps
            ok = any(
                c in p2.right
                and p1.left == f0.left
                and p1.right - [c] + [c.left] == f0.right
                and p2.left == f1.left
                and p2.right - [c] + [c.right] == f1.right
                for c in _binaries(p1.right, Connective.AND)
            )
        case Rule.OR_LW:
            p1, p2 = ps
            ok = any(
                c in p2.left
                and p1.left - [c] + [c.left] == f0.left
                and p1.right == f0.right
                and p2.left - [c] + [c.right] == f1.left
                and p2.right == f1.right
                for c in _binaries(p1.left, Connective.OR)
            )
        case Rule.COM:
            p1, p2 = ps
            if p1.left + p2.left == f0.left + f1.left and p1.right + p2.right == f0.right + f1.right:
                return None
            return "com-multiset"
        case Rule.CUT:
            p = ps[0]
            ok = any(
                a in f1.right and p.left == (f0.left - [a]) + f1.left and p.right == f0.right + (f1.right - [a])
                for a in f0.left.distinct()
            ) or any(
                a in f1.left and p.left == f0.left + (f1.left - [a]) and p.right == (f0.right - [a]) + f1.right
                for a in f0.right.distinct()
            )
            return None if ok else "cut-formula"
        case _:
            return "principal-shape"
    return None if ok else "principal-shape"


def focus_layout(rule: Rule) -> list[int]:
    """Which premise each focus entry points into."""
    if rule in (Rule.EC, Rule.D):
        return [0, 0]
    if rule in (Rule.EW, Rule.ID_OMEGA, Rule.EC_OMEGA, Rule.EC_OMEGA_STAR) or rule.is_leaf:
        return []
    if rule.arity == 1:
        return [0]
    return [0, 1]


def _principal_count(rule: Rule) -> int:
    if rule.is_leaf or rule in (Rule.ID_OMEGA, Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
        return 0
    return 2 if rule.two_principals else 1


def _check_leaf(system: SystemId, node: Derivation, addr: NodeAddr) -> None:
    if node.rule is Rule.OPEN:
        return
    if len(node.conclusion) != 1:
        _fail(node, addr, "leaf-shape", "an initial sequent has exactly one component")
    s = node.conclusion.sequents[0]
    match node.rule:
        case Rule.ID:
            ok = len(s.left) == 1 and s.left == s.right
        case Rule.TOP_R:
            ok = TOP in s.right
            if ok and system.omega and any(isinstance(a, Eigen) for a in s.formulas()):
                _fail(node, addr, "leaf-context-eigen")
        case Rule.BOT_L:
            ok = BOT in s.left
            if ok and system.omega and any(isinstance(a, Eigen) for a in s.formulas()):
                _fail(node, addr, "leaf-context-eigen")
        case Rule.T_R:
            ok = s == Sequent.of((), (T,))
        case Rule.F_L:
            ok = s == Sequent.of((F,), ())
        case _:
            ok = False
    if not ok:
        _fail(node, addr, "leaf-shape", str(s))


def _check_contraction_blocks(node: Derivation, addr: NodeAddr) -> None:
    premise = node.premises[0].conclusion
    if not node.copies or (node.rule is Rule.EC_OMEGA and len(node.copies) != 1):
        _fail(node, addr, "annotation", "EC_omega contracts exactly one block, EC_omega_star at least one")
    all_kept: set[int] = set()
    all_removed: set[int] = set()
    for kept, removed in node.copies:
        kept, removed = set(kept), set(removed)
        if not kept or not removed or kept & removed:
            _fail(node, addr, "annotation", "kept and removed blocks must be non-empty and disjoint")
        if not (kept | removed) <= set(premise.ids):
            _fail(node, addr, "unknown-component")
        if removed & all_removed or removed & all_kept or kept & all_removed:
            _fail(node, addr, "annotation", "removed blocks overlap")
        all_kept |= kept
        all_removed |= removed
    for kept, removed in node.copies:
        if is_copy(premise.restrict(kept), premise.restrict(removed)) is None:
            _fail(node, addr, "ec-copy", f"{premise.restrict(removed)} is not a copy of {premise.restrict(kept)}")
    if not node.conclusion.same_multiset(premise.without(all_removed)):
        _fail(node, addr, "side-context")
    if node.rule is Rule.EC_OMEGA_STAR:
        g = node.conclusion
        try:
            closed = is_closed(g)
        except ShapeError:
            closed = False
        if not closed:
            _fail(node, addr, "omega-closed")
        blocks = [g.restrict(m) for m in closure_partition_ids(g)]
        for i in range(len(blocks)):
            for j in range(i + 1, len(blocks)):
                if is_copy(blocks[i], blocks[j]) is not None:
                    _fail(node, addr, "ec-maximality", f"{blocks[j]} is still a copy of {blocks[i]}")


def check_node(system: SystemId, node: Derivation, addr: NodeAddr = (), allow_open: bool = False) -> None:
    """Validate one rule instance; raise RuleViolation on the first failed condition."""
    rule = node.rule
    concl = node.conclusion

    for _, s in concl:
        for a in s.formulas():
            if isinstance(a, Bin) and contains_eigen(a):
                _fail(node, addr, "eigen-in-formula", str(a))
        if system.single_conclusion and not s.single_conclusion:
            _fail(node, addr, "single-conclusion", str(s))

    if rule is Rule.OPEN and not allow_open:
        _fail(node, addr, "open-leaf")
    if rule in (Rule.WL, Rule.WR) and not system.weakening:
        _fail(node, addr, "system-rule", f"{rule} is not a rule of {system}")
    if system.omega and rule in OMEGA_FORBIDDEN:
        _fail(node, addr, "omega-forbidden")
    if not system.omega and rule in ONLY_OMEGA:
        _fail(node, addr, "system-rule", f"{rule} needs the labeled subsystem")
    if len(node.premises) != rule.arity:
        _fail(node, addr, "arity", f"{len(node.premises)} premises for a rule of arity {rule.arity}")

    if system.omega:
        try:
            eigen_profile(concl)
        except DuplicateEigenId as e:
            _fail(node, addr, "duplicate-eigen", str(e))
        except ShapeError as e:
            _fail(node, addr, "unlabeled-eigen", str(e))

    if rule.is_leaf:
        _check_leaf(system, node, addr)
        return

    if rule in (Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
        _check_contraction_blocks(node, addr)
        return

    layout = focus_layout(rule)
    if len(node.focus) != len(layout):
        _fail(node, addr, "annotation", f"expected {len(layout)} focus ids, found {len(node.focus)}")
    focus: list[Sequent] = []
    for cid, k in zip(node.focus, layout):
        premise = node.premises[k].conclusion
        if cid not in premise:
            _fail(node, addr, "unknown-component", f"focus {cid} not in premise {k}")
        focus.append(premise[cid])

    expected = _principal_count(rule)
    if len(node.principal) != expected:
        _fail(node, addr, "annotation", f"expected {expected} principal ids, found {len(node.principal)}")
    pids = node.principal_ids
    if len(set(pids)) != len(pids) or any(c not in concl for c in pids):
        _fail(node, addr, "unknown-component", "principal ids must be distinct conclusion components")
    if rule.two_principals:
        if sorted(p.n for p in node.principal) != [1, 2]:
            _fail(node, addr, "annotation", "principal sides must be marked 1 and 2")
        principals = [concl[p.cid] for p in sorted(node.principal, key=lambda p: p.n)]
    else:
        if any(p.n != 0 for p in node.principal):
            _fail(node, addr, "annotation", "only COM, and_rw and or_lw mark principal sides")
        principals = [concl[c] for c in pids]

    if rule is Rule.EC and node.focus[0] == node.focus[1]:
        _fail(node, addr, "ec-duplicate", "EC needs two distinct components")
    removed: list[set[int]] = [set() for _ in node.premises]
    for cid, k in zip(node.focus, layout):
        removed[k].add(cid)
    side_expected = sorted(
        s.key() for k, p in enumerate(node.premises) for c, s in p.conclusion if c not in removed[k]
    )
    side_actual = sorted(s.key() for c, s in concl if c not in set(pids))
    if side_expected != side_actual:
        _fail(node, addr, "side-context")

    match rule:
        case Rule.ID_OMEGA:
            pass
        case Rule.EW:
            pass
        case Rule.EC:
            if focus[0] != focus[1]:
                _fail(node, addr, "ec-duplicate", f"{focus[0]} and {focus[1]} differ")
            if principals[0] != focus[0]:
                _fail(node, addr, "principal-shape")
        case Rule.D:
            _check_density(node, addr, focus, principals[0])
        case _ if rule.arity == 1:
            label = _one_premise_shape(system, rule, focus[0], principals[0])
            if label:
                _fail(node, addr, label)
        case _:
            label = _two_premise_shape(rule, focus[0], focus[1], principals)
            if label:
                _fail(node, addr, label)

    if system.omega and rule.arity == 2:
        profiles = []
        for k, p in enumerate(node.premises):
            try:
                v_l, v_r = eigen_profile(p.conclusion)
            except ShapeError as e:
                _fail(node, addr, "omega-closed", str(e))
            if v_l != v_r:
                _fail(node, addr, "omega-closed", f"premise {k} is not closed")
            profiles.append(v_l)
        if profiles[0] & profiles[1]:
            _fail(node, addr, "omega-disjoint", f"shared ids {sorted(profiles[0] & profiles[1])}")


def _check_density(node: Derivation, addr: NodeAddr, focus: list[Sequent], p: Sequent) -> None:
    f0, f1 = focus
    shape_ok = False
    for v in f0.left.distinct():
        if not isinstance(v, (Atom, Eigen)) or v not in f1.right:
            continue
        if p.left == (f0.left - [v]) + f1.left and p.right == f0.right + (f1.right - [v]):
            shape_ok = True
            if not any(occurs(v, a) for _, s in node.conclusion for a in s.formulas()):
                return
    _fail(node, addr, "eigen-fresh" if shape_ok else "principal-shape")


def check_rule_instance(
    system: SystemId,
    rule: Rule,
    premises: list[Hypersequent],
    conclusion: Hypersequent,
    focus: tuple = (),
    principal: tuple = (),
    copies: tuple = (),
) -> Optional[RuleViolation]:
    """Check a single annotated instance; return the violation or None."""
    stubs = tuple(Derivation(Rule.OPEN, h) for h in premises)
    principal = tuple(p if isinstance(p, Principal) else Principal(*p) for p in principal)
    node = Derivation(rule, conclusion, stubs, tuple(focus), principal, tuple(copies))
    try:
        check_node(system, node, ())
    except RuleViolation as v:
        return v
    return None


def check_proof(system: SystemId, d: Derivation, allow_open: bool = False) -> Optional[RuleViolation]:
    """Check every node in preorder; return the first violation or None."""
    for addr, node in d.walk():
        try:
            check_node(system, node, addr, allow_open)
        except RuleViolation as v:
            log.trace("Check failed at {}: {}", list(addr), v.label, details={"rule": str(node.rule)})
            return v
    return None


def verify_proof(system: SystemId, d: Derivation, allow_open: bool = False) -> Derivation:
    """Like :func:`check_proof` but raise the violation."""
    violation = check_proof(system, d, allow_open)
    if violation is not None:
        raise violation
    return d


# --------------------------------------------------------------- labeled proofs


def check_labeling(d: Derivation) -> list[str]:
    """Profile bookkeeping of a labeled proof; returns human-readable failures.

    Every node is closed, one-premise rules keep the profile, two-premise
    rules take the disjoint union of their premises' profiles, and the root
    profile is exactly the set of ids introduced by ``p_k => p_k`` leaves.
    """
    problems: list[str] = []
    leaf_ids: set[int] = set()
    for addr, node in d.walk():
        try:
            v_l, v_r = eigen_profile(node.conclusion)
        except ShapeError as e:
            problems.append(f"{list(addr)}: {e}")
            continue
        if v_l != v_r:
            problems.append(f"{list(addr)}: not closed")
        if node.rule is Rule.ID and node.conclusion.has_eigen():
            leaf_ids |= v_l
        if not node.premises or node.rule in (Rule.EC_OMEGA, Rule.EC_OMEGA_STAR):
            continue
        try:
            premise_profiles = [eigen_profile(p.conclusion)[0] for p in node.premises]
        except ShapeError:
            continue
        if len(premise_profiles) == 2 and premise_profiles[0] & premise_profiles[1]:
            problems.append(f"{list(addr)}: premises share ids")
        union = frozenset().union(*premise_profiles)
        if v_l != union:
            problems.append(f"{list(addr)}: profile {sorted(v_l)} differs from premises {sorted(union)}")
    root_l, _ = eigen_profile(d.conclusion) if not problems else (frozenset(), frozenset())
    if not problems and set(root_l) != leaf_ids:
        problems.append(f"root profile {sorted(root_l)} differs from leaf ids {sorted(leaf_ids)}")
    return problems


def proof_stats(d: Derivation) -> dict:
    counts = d.rule_counts()
    return {
        "size": d.size,
        "height": d.height,
        "rules": {str(rule): n for rule, n in sorted(counts.items(), key=lambda kv: kv[0].value)},
    }
