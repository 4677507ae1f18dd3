"""Schema-constrained multi-framework code emission."""
from .dispatch import InternalConstraintViolation, dispatch
from .engine import ConstraintState, InadmissibleEvent, admissible, is_complete, replay, step
from .events import (
    Attr,
    BindProp,
    CloseTag,
    CodeBundle,
    Event,
    FileEnd,
    FileStart,
    Framework,
    LoopEnd,
    LoopStart,
    OpenTag,
    TextContent,
)
from .propose import (
    FilterResult,
    FuelExhausted,
    FuzzProposer,
    ReferenceProposer,
    emit,
    fuzz_proposer,
    propose_and_filter,
    reference_proposer,
)
from .render import IncompleteStream, render

__all__ = [
    "Attr", "BindProp", "CloseTag", "CodeBundle", "ConstraintState", "Event", "FileEnd",
    "FileStart", "FilterResult", "Framework", "FuelExhausted", "FuzzProposer",
    "InadmissibleEvent", "IncompleteStream", "InternalConstraintViolation", "LoopEnd",
    "LoopStart", "OpenTag", "ReferenceProposer", "TextContent", "admissible", "dispatch",
    "emit", "fuzz_proposer", "is_complete", "propose_and_filter", "reference_proposer",
    "render", "replay", "step",
]
