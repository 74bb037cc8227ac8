import pytest

from densify.calculus import Rule, SystemId, check_rule_instance
from densify.syntax import Atom, Eigen, Hypersequent, Sequent, fusion, parse_hypersequent

A = Atom("A")


def H(text: str, *ids: int) -> Hypersequent:
    return parse_hypersequent(text, ids or None)


COPIES4 = "A => p1 | p1 => C | A => p2 | p2 => C"

# (system, rule, premises, conclusion, focus, principal, copies, expected label)
VIOLATIONS = [
    (
        "giul",
        Rule.ID,
        [],
        Hypersequent.of([Sequent.of([fusion(Eigen(1), A)], [fusion(Eigen(1), A)])]),
        (),
        (),
        (),
        "eigen-in-formula",
    ),
    ("gul", Rule.ID, [], H("A => A, B"), (), (), (), "single-conclusion"),
    ("gmtl", Rule.ID, [], H("A => A, A"), (), (), (), "single-conclusion"),
    ("giul", Rule.OPEN, [], H("A => A"), (), (), (), "open-leaf"),
    ("giul", Rule.WL, [H("A => A")], H("A, B => A", 2), (1,), ((2, 0),), (), "system-rule"),
    ("giul-omega", Rule.EC, [H("A => A | A => A")], H("A => A"), (1, 2), ((1, 0),), (), "omega-forbidden"),
    ("giul", Rule.EC_OMEGA, [H(COPIES4)], H("A => p1 | p1 => C"), (), (), (((1, 2), (3, 4)),), "system-rule"),
    ("giul", Rule.COM, [H("A => A")], H("A => A"), (1,), (), (), "arity"),
    ("giul-omega", Rule.ID, [], H("p1, p1 => p1, p1"), (), (), (), "duplicate-eigen"),
    ("giul-omega", Rule.ID, [], H("p => p"), (), (), (), "unlabeled-eigen"),
    ("giul", Rule.ID, [], H("A => B"), (), (), (), "leaf-shape"),
    ("giul", Rule.ID, [], H("A => A | A => A"), (), (), (), "leaf-shape"),
    ("giul", Rule.T_R, [], H("A => t"), (), (), (), "leaf-shape"),
    ("giul", Rule.F_L, [], H("f => A"), (), (), (), "leaf-shape"),
    ("giul-omega", Rule.TOP_R, [], H("p1 => top"), (), (), (), "leaf-context-eigen"),
    ("giul-omega", Rule.EC_OMEGA, [H(COPIES4)], H("A => p1 | p1 => C"), (), (), (), "annotation"),
    (
        "giul-omega",
        Rule.EC_OMEGA,
        [H(COPIES4 + " | A => p3 | p3 => C")],
        H("A => p1 | p1 => C"),
        (),
        (),
        (((1, 2), (3, 4)), ((1, 2), (5, 6))),
        "annotation",
    ),
    (
        "giul-omega",
        Rule.EC_OMEGA,
        [H(COPIES4)],
        H("A => p1 | p1 => C"),
        (),
        (),
        (((1, 2), (8, 9)),),
        "unknown-component",
    ),
    (
        "giul-omega",
        Rule.EC_OMEGA_STAR,
        [H("A => p1 | p1 => C | A => p2 | p2 => B")],
        H("A => p1 | p1 => C"),
        (),
        (),
        (((1, 2), (3, 4)),),
        "ec-copy",
    ),
    (
        "giul-omega",
        Rule.EC_OMEGA_STAR,
        [H(COPIES4 + " | A => p3 | p3 => C")],
        H(COPIES4),
        (),
        (),
        (((1, 2), (5, 6)),),
        "ec-maximality",
    ),
    (
        "giul-omega",
        Rule.EC_OMEGA_STAR,
        [H(COPIES4)],
        H("A => p1 | p1 => C | B => B"),
        (),
        (),
        (((1, 2), (3, 4)),),
        "side-context",
    ),
    (
        "giul-omega",
        Rule.EC_OMEGA_STAR,
        [H(COPIES4 + " | A => p5")],
        H("A => p1 | p1 => C | A => p5", 1, 2, 5),
        (),
        (),
        (((1, 2), (3, 4)),),
        "omega-closed",
    ),
    (
        "giul",
        Rule.COM,
        [H("A => A"), H("B => B", 2)],
        H("A => B | B => A", 3, 4),
        (1,),
        ((3, 1), (4, 2)),
        (),
        "annotation",
    ),
    (
        "giul",
        Rule.COM,
        [H("A => A"), H("B => B", 2)],
        H("A => B | B => A", 3, 4),
        (1, 5),
        ((3, 1), (4, 2)),
        (),
        "unknown-component",
    ),
    ("giul", Rule.T_L, [H("A => B")], H("A, t => B", 2), (1,), (), (), "annotation"),
    ("giul", Rule.T_L, [H("A => B")], H("A, t => B", 2), (1,), ((5, 0),), (), "unknown-component"),
    (
        "giul",
        Rule.COM,
        [H("A => A"), H("B => B", 2)],
        H("A => B | B => A", 3, 4),
        (1, 2),
        ((3, 1), (4, 1)),
        (),
        "annotation",
    ),
    ("giul", Rule.T_L, [H("A => B")], H("A, t => B", 2), (1,), ((2, 1),), (), "annotation"),
    ("giul", Rule.EC, [H("A => A | A => A")], H("A => A"), (1, 1), ((1, 0),), (), "ec-duplicate"),
    ("giul", Rule.EC, [H("A => A | B => B")], H("A => A"), (1, 2), ((1, 0),), (), "ec-duplicate"),
    ("giul", Rule.T_L, [H("A => B | C => C")], H("A, t => B", 3), (1,), ((3, 0),), (), "side-context"),
    ("giul", Rule.T_L, [H("A => B")], H("A => B, t", 2), (1,), ((2, 0),), (), "principal-shape"),
    ("giul", Rule.IMP_R, [H("A => B")], H("=> B -> A", 2), (1,), ((2, 0),), (), "principal-shape"),
    (
        "giul",
        Rule.FUS_R,
        [H("=> A"), H("=> B", 2)],
        H("=> B * A", 3),
        (1, 2),
        ((3, 0),),
        (),
        "principal-shape",
    ),
    (
        "giul",
        Rule.AND_RW,
        [H("=> A"), H("=> B", 2)],
        H("=> A /\\ B | => B", 3, 4),
        (1, 2),
        ((3, 1), (4, 2)),
        (),
        "principal-shape",
    ),
    (
        "giul",
        Rule.COM,
        [H("A => A"), H("B => B", 2)],
        H("A => B | B => B", 3, 4),
        (1, 2),
        ((3, 1), (4, 2)),
        (),
        "com-multiset",
    ),
    ("giul", Rule.CUT, [H("A => B"), H("B => C", 2)], H("A => D", 3), (1, 2), ((3, 0),), (), "cut-formula"),
    (
        "giul",
        Rule.D,
        [H("p => B | A => p | p => C")],
        H("p => C | A => B", 3, 4),
        (1, 2),
        ((4, 0),),
        (),
        "eigen-fresh",
    ),
    ("gimtl-omega", Rule.WL, [H("p1 => p1")], H("p2, p1 => p1", 2), (1,), ((2, 0),), (), "weakening-eigen"),
    (
        "giul-omega",
        Rule.COM,
        [H("A => p1"), H("p1 => B", 2)],
        H("A => B | p1 => p1", 3, 4),
        (1, 2),
        ((3, 1), (4, 2)),
        (),
        "omega-closed",
    ),
]


@pytest.mark.parametrize(
    "system,rule,premises,conclusion,focus,principal,copies,label",
    VIOLATIONS,
    ids=[f"{case[1]}-{case[-1]}-{k}" for k, case in enumerate(VIOLATIONS)],
)
def test_violation_label(system, rule, premises, conclusion, focus, principal, copies, label):
    violation = check_rule_instance(
        SystemId.from_value(system), rule, premises, conclusion, focus, principal, copies
    )
    assert violation is not None, f"{rule} instance was accepted"
    assert violation.label == label
    assert violation.node == ()


VALID = [
    ("giul", Rule.T_L, [H("A => B")], H("A, t => B", 2), (1,), ((2, 0),), ()),
    ("giul", Rule.COM, [H("A => A"), H("B => B", 2)], H("A => B | B => A", 3, 4), (1, 2), ((3, 1), (4, 2)), ()),
    ("giul", Rule.CUT, [H("A => B"), H("B => C", 2)], H("A => C", 3), (1, 2), ((3, 0),), ()),
    ("giul", Rule.CUT, [H("B => C"), H("A => B", 2)], H("A => C", 3), (1, 2), ((3, 0),), ()),
    ("giul", Rule.D, [H("q => B | A => q")], H("A => B", 3), (1, 2), ((3, 0),), ()),
    ("gmtl", Rule.WR, [H("A => ")], H("A => B", 2), (1,), ((2, 0),), ()),
    ("giul", Rule.EW, [H("A => A")], H("A => A | B => C", 1, 2), (), ((2, 0),), ()),
    ("giul-omega", Rule.EC_OMEGA, [H(COPIES4)], H("A => p1 | p1 => C"), (), (), (((1, 2), (3, 4)),)),
    ("giul-omega", Rule.EC_OMEGA_STAR, [H(COPIES4)], H("A => p1 | p1 => C"), (), (), (((1, 2), (3, 4)),)),
    ("giul-omega", Rule.ID, [], H("p3 => p3"), (), (), ()),
    ("giul-omega", Rule.TOP_R, [], H("A => top, B"), (), (), ()),
]


@pytest.mark.parametrize("system,rule,premises,conclusion,focus,principal,copies", VALID)
def test_valid_instance(system, rule, premises, conclusion, focus, principal, copies):
    violation = check_rule_instance(
        SystemId.from_value(system), rule, premises, conclusion, focus, principal, copies
    )
    assert violation is None, str(violation)
