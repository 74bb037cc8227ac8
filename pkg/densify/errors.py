"""Exceptions raised by the densify kernel and pipeline."""


class DensifyError(Exception):
    """Base class for all densify errors."""


class ParseError(DensifyError, ValueError):
    """Raised when formula or hypersequent text cannot be parsed."""

    def __init__(self, message: str, text: str = "", position: int = -1):
        self.text = text
        self.position = position
        if position >= 0:
            message = f"{message} at position {position} in '{text}'"
        super().__init__(message)


class EigenPlacementError(ParseError):
    """An eigenvariable appears under a connective."""


class ShapeError(DensifyError, ValueError):
    """Raised when a structural precondition does not hold."""


class DuplicateEigenId(ShapeError):
    """An eigenvariable id repeats on one side of a labeled hypersequent."""

    def __init__(self, eigen_id: int, side: str):
        self.eigen_id = eigen_id
        self.side = side
        super().__init__(f"eigenvariable p{eigen_id} occurs twice on the {side}")


class NotClosedError(ShapeError):
    """A hypersequent expected to be closed is not."""


class GoalShapeError(ShapeError):
    """The root of a proof is not an instance of the density rule premise."""


class AddressError(DensifyError, ValueError):
    """A node address does not exist in a derivation."""


class RuleViolation(DensifyError):
    """A rule instance failed a schema or side condition.

    :param rule: The rule tag of the failing node.
    :type rule: Rule
    :param node: Address of the failing node from the root.
    :type node: tuple[int, ...]
    :param label: Stable name of the failed condition (e.g. ``com-multiset``).
    :type label: str
    :param detail: Free text for humans.
    :type detail: str
    """

    def __init__(self, rule, node: tuple[int, ...], label: str, detail: str = ""):
        self.rule = rule
        self.node = tuple(node)
        self.label = label
        self.detail = detail
        super().__init__(f"{rule} at {list(self.node)}: {label}" + (f" ({detail})" if detail else ""))


class AnnotationError(DensifyError):
    """The annotator found no reading, or more than one, for a node."""


class CopyWitnessError(DensifyError):
    """An elimination target is not a copy of the template focus."""


class ExtractionError(DensifyError):
    """A multi-focus extraction met a node where a focus was pruned away."""


class PipelineError(DensifyError):
    """A pipeline stage failed its postcondition.

    :param stage: The stage or property that failed, e.g. ``separation`` or ``repair``.
    :type stage: str
    :param message: Description of the failure.
    :type message: str
    """

    def __init__(self, stage: str, message: str):
        self.stage = stage
        super().__init__(f"[{stage}] {message}")


class BudgetExhausted(PipelineError):
    """A bounded search ran out of budget before reaching its goal."""


class InvariantViolation(PipelineError):
    """An asserted structural property failed."""
