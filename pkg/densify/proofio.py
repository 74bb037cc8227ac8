"""JSON proof files.

A proof document is ``{"system": "giul", "proof": <node>}`` where a node is::

    {
      "rule": "COM",
      "conclusion": "A => p | p => A",
      "componentIds": [5, 6],
      "focus": [1, 2],
      "principal": [{"componentId": 5, "n": 1}, {"componentId": 6, "n": 2}],
      "premises": [...]
    }

``componentIds`` lists the ids of the conclusion's components in the order
they are printed; when absent the components are numbered 1..n. Nodes
without ``focus``/``principal`` can be completed with
:func:`densify.builder.annotate`.
"""

from typing import Any, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .calculus import Derivation, Principal, Rule, SystemId
from .errors import ParseError
from .syntax import format_hypersequent, parse_hypersequent


class PrincipalModel(BaseModel):
    model_config = ConfigDict(populate_by_name=True)

    component_id: int = Field(alias="componentId")
    n: int = 0


class CopyModel(BaseModel):
    kept: list[int]
    removed: list[int]


class ProofNode(BaseModel):
    """One node of a serialized derivation."""

    model_config = ConfigDict(populate_by_name=True)

    rule: str
    conclusion: str
    component_ids: Optional[list[int]] = Field(default=None, alias="componentIds")
    focus: list[int] = Field(default_factory=list)
    principal: list[PrincipalModel] = Field(default_factory=list)
    copies: list[CopyModel] = Field(default_factory=list)
    pec: list[int] = Field(default_factory=list)
    premises: list["ProofNode"] = Field(default_factory=list)

    @model_validator(mode="before")
    @classmethod
    def validate_model(cls, values: Any) -> Any:
        if isinstance(values, dict) and "rule" in values:
            # normalise symbolic spellings to the stored tag
            values = {**values, "rule": Rule.from_value(str(values["rule"])).value}
        return values


class ProofDocument(BaseModel):
    system: Optional[str] = None
    proof: ProofNode


def to_model(d: Derivation) -> ProofNode:
    return ProofNode(
        rule=d.rule.value,
        conclusion=format_hypersequent(d.conclusion),
        component_ids=list(d.conclusion.ids),
        focus=list(d.focus),
        principal=[PrincipalModel(component_id=p.cid, n=p.n) for p in d.principal],
        copies=[CopyModel(kept=list(k), removed=list(r)) for k, r in d.copies],
        pec=list(d.pec),
        premises=[to_model(p) for p in d.premises],
    )


def from_model(node: ProofNode) -> Derivation:
    rule = Rule.from_value(node.rule)
    conclusion = parse_hypersequent(node.conclusion, node.component_ids)
    return Derivation(
        rule,
        conclusion,
        tuple(from_model(p) for p in node.premises),
        tuple(node.focus),
        tuple(Principal(p.component_id, p.n) for p in node.principal),
        tuple((tuple(c.kept), tuple(c.removed)) for c in node.copies),
        tuple(node.pec),
    )


def dump_proof(d: Derivation, system: Optional[SystemId] = None) -> str:
    doc = ProofDocument(system=str(system) if system else None, proof=to_model(d))
    return doc.model_dump_json(by_alias=True, exclude_defaults=True, indent=2) + "\n"


def load_proof(text: str) -> tuple[Optional[SystemId], Derivation]:
    """Parse a proof document; raise ParseError on malformed JSON or formulas."""
    try:
        doc = ProofDocument.model_validate_json(text)
    except ValidationError as e:
        raise ParseError(f"invalid proof document: {e.errors()[0]['msg']}") from e
    except ValueError as e:
        raise ParseError(f"invalid proof document: {e}") from e
    system = SystemId.from_value(doc.system) if doc.system else None
    return system, from_model(doc.proof)
