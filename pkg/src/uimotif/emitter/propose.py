"""Generation under masks: a proposer suggests events, the engine filters them."""
from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional, Protocol

from ..model import Blueprint
from .dispatch import dispatch
from .engine import ConstraintState, admissible, is_complete, step
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
from .render import render


class FuelExhausted(Exception):
    """The proposer could not finish the bundle within the proposal budget."""


class Proposer(Protocol):
    def propose(self, state: ConstraintState) -> Optional[Event]:
        """Next candidate event, or None when the proposer has nothing left."""

    def feedback(self, accepted: bool) -> None:
        ...


class ReferenceProposer:
    """Replays the dispatcher's stream verbatim."""

    def __init__(self, events: list[Event]) -> None:
        self.events = events
        self.cursor = 0

    def propose(self, state):
        return self.events[self.cursor] if self.cursor < len(self.events) else None

    def feedback(self, accepted):
        if accepted:
            self.cursor += 1


class FuzzProposer:
    """Reference stream interleaved with corrupted candidates.

    With probability ``error_rate`` the proposal is a mutation of the next
    reference event (wrong close tag, wrong sink, duplicate binding, skipped
    event, stray loop or file markers, foreign tags). Mutations the engine
    happens to accept are kept. When an accepted event occurs later in the
    reference stream, that occurrence is moved up so the events it jumped
    over are still proposed; otherwise the stream may drift and stall.
    """

    def __init__(self, events: list[Event], seed: int, error_rate: float = 0.4,
                 patience: int = 50) -> None:
        self.events = list(events)
        self.rng = random.Random(seed)
        self.error_rate = error_rate
        self.patience = patience
        self.cursor = 0
        self.stalled = 0
        self._last: Optional[Event] = None
        self.history: list[Event] = []

    def _mutate(self, ev: Event) -> Event:
        rng = self.rng
        nxt = self.events[self.cursor + 1] if self.cursor + 1 < len(self.events) else None
        choice = rng.randrange(10)
        if choice == 0 and nxt is not None:
            return nxt  # skip one event
        if choice == 1:
            return CloseTag(rng.choice(["div", "p", "span", "a", "img", "section"]))
        if choice == 2 and isinstance(ev, BindProp):
            bad = rng.choice(["class", "style", "src", "href", "text-content", "placeholder", "loop-body"])
            return BindProp(ev.template_id, ev.prop_name, bad, ev.value)
        if choice == 3:
            binds = [e for e in self.history[-12:] if isinstance(e, BindProp)]
            if binds:
                return rng.choice(binds)  # duplicate binding
            return Attr("style", "color: red")
        if choice == 4:
            return OpenTag(rng.choice(["table", "span", "img", "ul"]))
        if choice == 5:
            return rng.choice([FileEnd(), FileStart("index.html"), FileStart("App.tsx")])
        if choice == 6:
            return rng.choice([LoopEnd(), LoopStart("bogus", "items0")])
        if choice == 7 and isinstance(ev, BindProp):
            return BindProp(ev.template_id, ev.prop_name, ev.sink, (ev.value or "") + "#tampered")
        if choice == 8:
            return TextContent("stray text")
        return Attr("href", "javascript:void(0)")

    def propose(self, state):
        if self.cursor >= len(self.events) or self.stalled > self.patience:
            return None
        ev = self.events[self.cursor]
        self._last = self._mutate(ev) if self.rng.random() < self.error_rate else ev
        return self._last

    def feedback(self, accepted):
        if not accepted:
            self.stalled += 1
            return
        ev = self._last
        self.history.append(ev)
        self.stalled = 0
        rest = self.events[self.cursor:]
        if ev in rest:
            j = self.cursor + rest.index(ev)
            self.events.insert(self.cursor, self.events.pop(j))
        else:
            self.events.insert(self.cursor, ev)
        self.cursor += 1


@dataclass(frozen=True)
class FilterResult:
    bundle: CodeBundle
    events: tuple[Event, ...]
    proposals: int
    rejections: int


def propose_and_filter(bp: Blueprint, mu: Framework, proposer: Proposer, fuel: int) -> FilterResult:
    """Pull candidates until the proposer is done; keep only admissible ones."""
    state = ConstraintState.initial(bp, mu)
    accepted: list[Event] = []
    proposals = rejections = 0
    while True:
        cand = proposer.propose(state)
        if cand is None:
            break
        if proposals >= fuel:
            raise FuelExhausted(f"fuel of {fuel} proposals spent, {rejections} rejected")
        proposals += 1
        if admissible(state, cand):
            state = step(state, cand)
            accepted.append(cand)
            proposer.feedback(True)
        else:
            rejections += 1
            proposer.feedback(False)
    if not is_complete(state) or not accepted:
        raise FuelExhausted(f"proposer stopped before completion after {proposals} proposals")
    return FilterResult(render(accepted, mu, bp), tuple(accepted), proposals, rejections)


def reference_proposer(bp: Blueprint, mu: Framework) -> ReferenceProposer:
    return ReferenceProposer(dispatch(bp, mu))


def fuzz_proposer(bp: Blueprint, mu: Framework, seed: int, error_rate: float = 0.4) -> FuzzProposer:
    return FuzzProposer(dispatch(bp, mu), seed, error_rate)


def emit(bp: Blueprint, mu: Framework, fuzz_seed: Optional[int] = None, fuel: Optional[int] = None) -> FilterResult:
    events = dispatch(bp, mu)
    if fuzz_seed is None:
        proposer: Proposer = ReferenceProposer(events)
    else:
        proposer = FuzzProposer(events, fuzz_seed)
    if fuel is None:
        fuel = 4 * len(events) + 100
    return propose_and_filter(bp, mu, proposer, fuel)
