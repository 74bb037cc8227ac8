"""Formulas, multisets, sequents and hypersequents.

This module holds the value types every other module works on, the text
grammar used on the command line and in JSON files, and the eigenvariable
machinery (profiles, closedness, copies) of the restricted calculus.

All values are immutable. Multisets are stored as tuples sorted by a fixed
total order on formulas, so structural equality of two :class:`Bag` objects
is multiset equality.
"""

from typing import Iterable, Iterator, Optional, Union
from collections import Counter
from dataclasses import dataclass, field
import enum
import functools
import itertools
import re

from .errors import ParseError, DuplicateEigenId, EigenPlacementError, NotClosedError, ShapeError


class Connective(enum.Enum):
    """Binary connectives of the object language."""

    FUSION = "*"
    IMP = "->"
    AND = "/\\"
    OR = "\\/"

    @classmethod
    def from_value(cls, value: str) -> "Connective":
        """Convert an operator spelling (ASCII or Unicode) to a Connective."""
        try:
            return cls(_CONNECTIVE_ALIASES.get(value, value))
        except ValueError as e:
            raise ValueError(f"Invalid connective: {value}") from e

    def __str__(self):
        return self.value

    def __repr__(self):
        return f"Connective.{self.name}"


_CONNECTIVE_ALIASES = {"⊙": "*", "→": "->", "∧": "/\\", "∨": "\\/"}


class Constant(enum.Enum):
    """Logical constants."""

    BOT = "bot"
    TOP = "top"
    T = "t"
    F = "f"

    def __str__(self):
        return self.value

    def __repr__(self):
        return f"Constant.{self.name}"


@dataclass(frozen=True, slots=True)
class Const:
    kind: Constant

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Atom:
    name: str

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Eigen:
    """An occurrence of the density eigenvariable; ``id == 0`` is unlabeled."""

    id: int = 0

    def __str__(self):
        return format_formula(self)


@dataclass(frozen=True, slots=True)
class Bin:
    op: Connective
    left: "Formula"
    right: "Formula"

    def __str__(self):
        return format_formula(self)


Formula = Union[Const, Atom, Eigen, Bin]

BOT = Const(Constant.BOT)
TOP = Const(Constant.TOP)
T = Const(Constant.T)
F = Const(Constant.F)
P = Eigen(0)


def fusion(a: Formula, b: Formula) -> Bin:
    return Bin(Connective.FUSION, a, b)


def imp(a: Formula, b: Formula) -> Bin:
    return Bin(Connective.IMP, a, b)


def conj(a: Formula, b: Formula) -> Bin:
    return Bin(Connective.AND, a, b)


def disj(a: Formula, b: Formula) -> Bin:
    return Bin(Connective.OR, a, b)


def neg(a: Formula) -> Bin:
    """¬A is A → f."""
    return imp(a, F)


def oplus(a: Formula, b: Formula) -> Bin:
    """A ⊕ B is ¬(¬A ⊙ ¬B)."""
    return neg(fusion(neg(a), neg(b)))


def iff(a: Formula, b: Formula) -> Bin:
    return conj(imp(a, b), imp(b, a))


_CONST_RANK = {Constant.BOT: 0, Constant.TOP: 1, Constant.T: 2, Constant.F: 3}
_OP_RANK = {Connective.FUSION: 0, Connective.IMP: 1, Connective.AND: 2, Connective.OR: 3}


@functools.lru_cache(maxsize=None)
def formula_key(a: Formula) -> tuple:
    """Total order key: constants < atoms < eigenvariables < binary formulas."""
    match a:
        case Const(kind):
            return (0, _CONST_RANK[kind])
        case Atom(name):
            return (1, name)
        case Eigen(eid):
            return (2, eid)
        case Bin(op, left, right):
            return (3, _OP_RANK[op], formula_key(left), formula_key(right))
    raise TypeError(f"not a formula: {a!r}")


def contains_eigen(a: Formula) -> bool:
    """True if an eigenvariable occurs anywhere inside ``a``."""
    if isinstance(a, Eigen):
        return True
    if isinstance(a, Bin):
        return contains_eigen(a.left) or contains_eigen(a.right)
    return False


def occurs(var: Formula, a: Formula) -> bool:
    """True if the variable ``var`` (an Atom or Eigen) occurs in ``a``."""
    if a == var:
        return True
    if isinstance(a, Bin):
        return occurs(var, a.left) or occurs(var, a.right)
    return False


@dataclass(frozen=True, slots=True)
class Bag:
    """A finite multiset of formulas kept in canonical order."""

    items: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(sorted(self.items, key=formula_key)))

    @classmethod
    def of(cls, *formulas: Formula) -> "Bag":
        return cls(tuple(formulas))

    def __iter__(self) -> Iterator[Formula]:
        return iter(self.items)

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, a: Formula) -> bool:
        return a in self.items

    def count(self, a: Formula) -> int:
        return self.items.count(a)

    def __add__(self, other: Iterable[Formula]) -> "Bag":
        return Bag(self.items + tuple(other))

    def __sub__(self, other: Iterable[Formula]) -> "Bag":
        rest = Counter(other)
        kept = []
        for a in self.items:
            if rest[a] > 0:
                rest[a] -= 1
            else:
                kept.append(a)
        return Bag(tuple(kept))

    def __and__(self, other: Iterable[Formula]) -> "Bag":
        rest = Counter(other)
        common = []
        for a in self.items:
            if rest[a] > 0:
                rest[a] -= 1
                common.append(a)
        return Bag(tuple(common))

    def issubset(self, other: "Bag") -> bool:
        mine = Counter(self.items)
        theirs = Counter(other.items)
        return all(theirs[a] >= n for a, n in mine.items())

    def __le__(self, other: "Bag") -> bool:
        return self.issubset(other)

    def key(self) -> tuple:
        return tuple(formula_key(a) for a in self.items)

    def eigen_ids(self) -> list[int]:
        return [a.id for a in self.items if isinstance(a, Eigen)]

    def without_eigens(self) -> "Bag":
        return Bag(tuple(a for a in self.items if not isinstance(a, Eigen)))

    def map(self, fn) -> "Bag":
        return Bag(tuple(fn(a) for a in self.items))

    def distinct(self) -> list[Formula]:
        return list(dict.fromkeys(self.items))

    def __str__(self):
        return ", ".join(format_formula(a) for a in self.items)


EMPTY = Bag()


@dataclass(frozen=True, slots=True)
class Sequent:
    """An ordered pair of multisets ``left => right``."""

    left: Bag = EMPTY
    right: Bag = EMPTY

    @classmethod
    def of(cls, left: Iterable[Formula] = (), right: Iterable[Formula] = ()) -> "Sequent":
        return cls(Bag(tuple(left)), Bag(tuple(right)))

    def key(self) -> tuple:
        return (self.left.key(), self.right.key())

    def v_left(self) -> list[int]:
        return self.left.eigen_ids()

    def v_right(self) -> list[int]:
        return self.right.eigen_ids()

    def has_eigen(self) -> bool:
        return bool(self.v_left() or self.v_right())

    def strip_eigens(self) -> "Sequent":
        return Sequent(self.left.without_eigens(), self.right.without_eigens())

    def rename(self, sigma: dict[int, int]) -> "Sequent":
        """Rename labeled eigenvariables; ids missing from ``sigma`` are kept."""

        def ren(a: Formula) -> Formula:
            if isinstance(a, Eigen) and a.id in sigma:
                return Eigen(sigma[a.id])
            return a

        return Sequent(self.left.map(ren), self.right.map(ren))

    def formulas(self) -> Iterator[Formula]:
        yield from self.left
        yield from self.right

    @property
    def single_conclusion(self) -> bool:
        return len(self.right) <= 1

    def __str__(self):
        return format_sequent(self)


def sequent_key(s: Sequent) -> tuple:
    return s.key()


@dataclass(frozen=True, slots=True)
class Hypersequent:
    """A multiset of sequents, each carrying a stable component id.

    Structural equality compares ids too; use :meth:`same_multiset` for
    the id-free multiset equality of the calculus.
    """

    components: tuple = ()

    def __post_init__(self):
        comps = tuple(sorted(((int(c), s) for c, s in self.components), key=lambda c: c[0]))
        ids = [c for c, _ in comps]
        if len(set(ids)) != len(ids):
            raise ShapeError(f"duplicate component id in {ids}")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, sequents: Iterable[Sequent], ids: Optional[Iterable[int]] = None) -> "Hypersequent":
        sequents = list(sequents)
        if ids is None:
            ids = range(1, len(sequents) + 1)
        return cls(tuple(zip(ids, sequents)))

    def __iter__(self) -> Iterator[tuple[int, Sequent]]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __contains__(self, cid: int) -> bool:
        return any(c == cid for c, _ in self.components)

    def __getitem__(self, cid: int) -> Sequent:
        for c, s in self.components:
            if c == cid:
                return s
        raise KeyError(cid)

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(c for c, _ in self.components)

    @property
    def sequents(self) -> tuple[Sequent, ...]:
        return tuple(s for _, s in self.components)

    def without(self, cids: Iterable[int]) -> "Hypersequent":
        drop = set(cids)
        return Hypersequent(tuple((c, s) for c, s in self.components if c not in drop))

    def restrict(self, cids: Iterable[int]) -> "Hypersequent":
        keep = set(cids)
        return Hypersequent(tuple((c, s) for c, s in self.components if c in keep))

    def plus(self, other: Union["Hypersequent", Iterable[tuple[int, Sequent]]]) -> "Hypersequent":
        return Hypersequent(self.components + tuple(other))

    def multiset_key(self) -> tuple:
        return tuple(sorted(s.key() for _, s in self.components))

    def same_multiset(self, other: "Hypersequent") -> bool:
        return self.multiset_key() == other.multiset_key()

    def rename(self, sigma: dict[int, int]) -> "Hypersequent":
        return Hypersequent(tuple((c, s.rename(sigma)) for c, s in self.components))

    def reindex(self, comp_map: dict[int, int]) -> "Hypersequent":
        return Hypersequent(tuple((comp_map.get(c, c), s) for c, s in self.components))

    def has_eigen(self) -> bool:
        return any(s.has_eigen() for _, s in self.components)

    def eigen_ids(self) -> set[int]:
        out: set[int] = set()
        for _, s in self.components:
            out.update(s.v_left())
            out.update(s.v_right())
        return out

    def find(self, s: Sequent, exclude: Iterable[int] = ()) -> Optional[int]:
        """Smallest component id whose sequent equals ``s``."""
        skip = set(exclude)
        for c, other in self.components:
            if c not in skip and other == s:
                return c
        return None

    def __str__(self):
        return format_hypersequent(self)


def multiset_difference(a: Hypersequent, b: Hypersequent) -> list[Sequent]:
    """Sequents of ``a`` not matched by sequents of ``b`` (saturating)."""
    rest = Counter(s for _, s in b)
    out = []
    for _, s in a:
        if rest[s] > 0:
            rest[s] -= 1
        else:
            out.append(s)
    return out


def sub_multiset(a: Iterable[Sequent], b: Iterable[Sequent]) -> bool:
    mine = Counter(a)
    theirs = Counter(b)
    return all(theirs[s] >= n for s, n in mine.items())


class IdSource:
    """Monotone counters for eigen ids and component ids.

    Not thread-safe; share one per pipeline run.
    """

    def __init__(self, next_eigen: int = 1, next_component: int = 1):
        self._eigen = itertools.count(next_eigen)
        self._component = itertools.count(next_component)
        self.last_eigen = next_eigen - 1
        self.last_component = next_component - 1

    def eigen(self) -> int:
        self.last_eigen = next(self._eigen)
        return self.last_eigen

    def component(self) -> int:
        self.last_component = next(self._component)
        return self.last_component

    def reserve(self, eigen: int = 0, component: int = 0) -> None:
        """Make sure future ids are strictly greater than the given ones."""
        if eigen > self.last_eigen:
            self._eigen = itertools.count(eigen + 1)
            self.last_eigen = eigen
        if component > self.last_component:
            self._component = itertools.count(component + 1)
            self.last_component = component

    def reserve_for(self, g: Hypersequent) -> None:
        self.reserve(max(g.eigen_ids(), default=0), max(g.ids, default=0))


@dataclass(frozen=True)
class EigenMaps:
    """Bijections on left and right eigen ids witnessing a copy."""

    left: dict = field(default_factory=dict)
    right: dict = field(default_factory=dict)

    def apply(self, g: Hypersequent) -> Hypersequent:
        merged = dict(self.right)
        merged.update(self.left)
        return g.rename(merged)

    def compose(self, then: "EigenMaps") -> "EigenMaps":
        """The maps of applying ``self`` first and ``then`` second."""
        return EigenMaps(
            {k: then.left.get(v, v) for k, v in self.left.items()},
            {k: then.right.get(v, v) for k, v in self.right.items()},
        )

    def inverse(self) -> "EigenMaps":
        return EigenMaps({v: k for k, v in self.left.items()}, {v: k for k, v in self.right.items()})


def eigen_profile(g: Hypersequent) -> tuple[frozenset, frozenset]:
    """Return ``(v_l, v_r)``; raise DuplicateEigenId on a repeated id."""
    left: set[int] = set()
    right: set[int] = set()
    for _, s in g:
        for k in s.v_left():
            if k == 0:
                raise ShapeError("unlabeled eigenvariable in a labeled hypersequent")
            if k in left:
                raise DuplicateEigenId(k, "left")
            left.add(k)
        for k in s.v_right():
            if k == 0:
                raise ShapeError("unlabeled eigenvariable in a labeled hypersequent")
            if k in right:
                raise DuplicateEigenId(k, "right")
            right.add(k)
    return frozenset(left), frozenset(right)


def is_closed(g: Hypersequent) -> bool:
    v_l, v_r = eigen_profile(g)
    return v_l == v_r


def closure_members(g: Hypersequent, seed: int) -> tuple[int, ...]:
    """The chase: component ids of the minimal closed part of ``g`` holding ``seed``.

    Unmatched ids are resolved smallest first, so the discovery order is
    deterministic.
    """
    left_home: dict[int, int] = {}
    right_home: dict[int, int] = {}
    for cid, s in g:
        for k in s.v_left():
            left_home[k] = cid
        for k in s.v_right():
            right_home[k] = cid

    s = g[seed]
    members = [seed]
    lset = set(s.v_left())
    rset = set(s.v_right())
    while True:
        pending = sorted(lset ^ rset)
        if not pending:
            return tuple(members)
        k = pending[0]
        home = right_home.get(k) if k in lset else left_home.get(k)
        if home is None:
            raise NotClosedError(f"p{k} has no partner occurrence in {g}")
        members.append(home)
        lset.update(g[home].v_left())
        rset.update(g[home].v_right())


def closure_partition_ids(g: Hypersequent) -> list[tuple[int, ...]]:
    """Partition the component ids of a closed hypersequent into closures."""
    seen: set[int] = set()
    parts = []
    for cid in g.ids:
        if cid in seen:
            continue
        members = closure_members(g, cid)
        seen.update(members)
        parts.append(members)
    return parts


def make_copy(g: Hypersequent, ids: IdSource) -> tuple[Hypersequent, EigenMaps]:
    """A disjoint copy of a closed hypersequent with fresh eigen and component ids."""
    if not is_closed(g):
        raise NotClosedError(f"cannot copy a hypersequent that is not closed: {g}")
    v_l, _ = eigen_profile(g)
    sigma = {k: ids.eigen() for k in sorted(v_l)}
    copy = Hypersequent(tuple((ids.component(), s.rename(sigma)) for _, s in g))
    return copy, EigenMaps(dict(sigma), dict(sigma))


def _eigen_assignments(src: list[int], dst: list[int], sigma: dict[int, int], used: set[int]):
    """Yield extensions of ``sigma`` mapping the ids ``src`` onto ``dst`` bijectively."""
    if len(src) != len(dst):
        return
    if not src:
        yield sigma
        return
    k = src[0]
    for pos, v in enumerate(dst):
        if pos > 0 and dst[pos - 1] == v:
            continue
        if k in sigma:
            if sigma[k] != v:
                continue
            yield from _eigen_assignments(src[1:], dst[:pos] + dst[pos + 1 :], sigma, used)
        elif v not in used:
            extended = dict(sigma)
            extended[k] = v
            yield from _eigen_assignments(src[1:], dst[:pos] + dst[pos + 1 :], extended, used | {v})


def match_sequents(s1: Sequent, s2: Sequent, sigma: Optional[dict[int, int]] = None) -> Iterator[dict[int, int]]:
    """Yield eigen renamings extending ``sigma`` that turn ``s1`` into ``s2``."""
    sigma = dict(sigma or {})
    if s1.strip_eigens() != s2.strip_eigens():
        return
    used = set(sigma.values())
    for left in _eigen_assignments(sorted(s1.v_left()), sorted(s2.v_left()), sigma, used):
        yield from _eigen_assignments(sorted(s1.v_right()), sorted(s2.v_right()), left, set(left.values()))


def find_copy_witness(
    g1: Hypersequent, g2: Hypersequent, sigma: Optional[dict[int, int]] = None
) -> Optional[tuple[dict[int, int], dict[int, int]]]:
    """Find ``(eigen map, component map)`` turning ``g1`` into ``g2``.

    Components are matched smallest id first and the first witness found
    is returned. No closedness or disjointness is required here.
    """
    if len(g1) != len(g2):
        return None
    if Counter(s.strip_eigens() for s in g1.sequents) != Counter(s.strip_eigens() for s in g2.sequents):
        return None
    items1 = list(g1)
    items2 = list(g2)

    def search(pos: int, sigma: dict[int, int], taken: frozenset) -> Optional[tuple[dict, dict]]:
        if pos == len(items1):
            return sigma, {}
        c1, s1 = items1[pos]
        for c2, s2 in items2:
            if c2 in taken:
                continue
            for extended in match_sequents(s1, s2, sigma):
                found = search(pos + 1, extended, taken | {c2})
                if found is not None:
                    eigen_map, comp_map = found
                    comp_map[c1] = c2
                    return eigen_map, comp_map
        return None

    return search(0, dict(sigma or {}), frozenset())


def is_copy(g1: Hypersequent, g2: Hypersequent) -> Optional[EigenMaps]:
    """Return copy maps iff ``g2`` is a disjoint copy of ``g1``; both must be closed."""
    try:
        if not (is_closed(g1) and is_closed(g2)):
            return None
    except ShapeError:
        return None
    v1, _ = eigen_profile(g1)
    v2, _ = eigen_profile(g2)
    if v1 & v2:
        return None
    found = find_copy_witness(g1, g2)
    if found is None:
        return None
    sigma, _ = found
    return EigenMaps(dict(sigma), dict(sigma))


# ---------------------------------------------------------------- text grammar

_TOKEN_SPEC = [
    ("SEQ", r"=>|⇒"),
    ("IFF", r"<->|↔"),
    ("IMP", r"->|→"),
    ("AND", r"/\\|∧"),
    ("OR", r"\\/|∨"),
    ("FUS", r"\*|⊙"),
    ("PLUS", r"\+|⊕"),
    ("NEG", r"~|¬"),
    ("LP", r"\("),
    ("RP", r"\)"),
    ("COMMA", r","),
    ("BAR", r"\|"),
    ("TOPSYM", r"⊤"),
    ("BOTSYM", r"⊥"),
    ("NAME", r"[A-Za-z][A-Za-z0-9_]*"),
    ("WS", r"\s+"),
]
_TOKEN_RE = re.compile("|".join(f"(?P<{name}>{pattern})" for name, pattern in _TOKEN_SPEC))
_EIGEN_RE = re.compile(r"p(\d*)")
_CONSTANTS = {"t": T, "f": F, "top": TOP, "bot": BOT}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError("unexpected character", text, pos)
        if m.lastgroup != "WS":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("END", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> str:
        return self.tokens[self.pos][0]

    def take(self, kind: str) -> str:
        tok_kind, value, where = self.tokens[self.pos]
        if tok_kind != kind:
            raise ParseError(f"expected {kind}, found '{value or 'end of input'}'", self.text, where)
        self.pos += 1
        return value

    def fail(self, message: str):
        raise ParseError(message, self.text, self.tokens[self.pos][2])

    def hypersequent(self) -> list[Sequent]:
        if self.peek() == "END":
            return []
        out = [self.sequent()]
        while self.peek() == "BAR":
            self.take("BAR")
            out.append(self.sequent())
        return out

    def sequent(self) -> Sequent:
        left = self.bag({"SEQ"})
        self.take("SEQ")
        right = self.bag({"BAR", "END"})
        return Sequent.of(left, right)

    def bag(self, stop: set[str]) -> list[Formula]:
        if self.peek() in stop:
            return []
        items = [self.sequent_formula()]
        while self.peek() == "COMMA":
            self.take("COMMA")
            items.append(self.sequent_formula())
        return items

    def sequent_formula(self) -> Formula:
        start = self.tokens[self.pos][2]
        a = self.formula()
        if isinstance(a, Bin) and contains_eigen(a):
            raise EigenPlacementError("eigenvariable under a connective", self.text, start)
        return a

    def formula(self) -> Formula:
        a = self.implication()
        if self.peek() == "IFF":
            self.take("IFF")
            a = iff(a, self.implication())
        return a

    def implication(self) -> Formula:
        a = self.disjunction()
        if self.peek() == "IMP":
            self.take("IMP")
            return imp(a, self.implication())
        return a

    def disjunction(self) -> Formula:
        a = self.conjunction()
        while self.peek() == "OR":
            self.take("OR")
            a = disj(a, self.conjunction())
        return a

    def conjunction(self) -> Formula:
        a = self.plus()
        while self.peek() == "AND":
            self.take("AND")
            a = conj(a, self.plus())
        return a

    def plus(self) -> Formula:
        a = self.product()
        while self.peek() == "PLUS":
            self.take("PLUS")
            a = oplus(a, self.product())
        return a

    def product(self) -> Formula:
        a = self.unary()
        while self.peek() == "FUS":
            self.take("FUS")
            a = fusion(a, self.unary())
        return a

    def unary(self) -> Formula:
        kind = self.peek()
        if kind == "NEG":
            self.take("NEG")
            return neg(self.unary())
        if kind == "LP":
            self.take("LP")
            a = self.formula()
            self.take("RP")
            return a
        if kind == "TOPSYM":
            self.take("TOPSYM")
            return TOP
        if kind == "BOTSYM":
            self.take("BOTSYM")
            return BOT
        if kind == "NAME":
            name = self.take("NAME")
            if name in _CONSTANTS:
                return _CONSTANTS[name]
            m = _EIGEN_RE.fullmatch(name)
            if m:
                return Eigen(int(m.group(1)) if m.group(1) else 0)
            return Atom(name)
        self.fail("expected a formula")


def parse_formula(text: str) -> Formula:
    parser = _Parser(text)
    a = parser.formula()
    parser.take("END")
    return a


def parse_sequent(text: str) -> Sequent:
    parser = _Parser(text)
    s = parser.sequent()
    parser.take("END")
    return s


def parse_hypersequent(text: str, ids: Optional[Iterable[int]] = None) -> Hypersequent:
    """Parse ``S1 | S2 | ...``; component ids default to 1..n."""
    parser = _Parser(text)
    sequents = parser.hypersequent()
    parser.take("END")
    if ids is not None:
        ids = list(ids)
        if len(ids) != len(sequents):
            raise ParseError(f"{len(ids)} component ids for {len(sequents)} components", text)
    return Hypersequent.of(sequents, ids)


def _is_negation(a: Formula) -> bool:
    return isinstance(a, Bin) and a.op is Connective.IMP and a.right == F


def _operand(a: Formula) -> str:
    if isinstance(a, Bin) and not _is_negation(a):
        return f"({format_formula(a)})"
    return format_formula(a)


def format_formula(a: Formula) -> str:
    match a:
        case Const(kind):
            return kind.value
        case Atom(name):
            return name
        case Eigen(eid):
            return f"p{eid}" if eid else "p"
        case Bin(op, left, right):
            if _is_negation(a):
                return "~" + _operand(left)
            return f"{_operand(left)} {op.value} {_operand(right)}"
    raise TypeError(f"not a formula: {a!r}")


def format_sequent(s: Sequent) -> str:
    return f"{s.left} => {s.right}".strip()


def format_hypersequent(g: Hypersequent) -> str:
    return " | ".join(format_sequent(s) for _, s in g)


def canonical_text(g: Hypersequent) -> str:
    """Printing in canonical multiset order, independent of component ids."""
    return " | ".join(format_sequent(s) for s in sorted(g.sequents, key=sequent_key))
