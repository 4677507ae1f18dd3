"""Rebuild a UI tree from flat, typed bounding boxes by recursive XY-cut."""
from __future__ import annotations

import json
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import (
    BBox,
    BlueprintError,
    MalformedJson,
    NodeKind,
    Payload,
    UiNode,
    UiTree,
    _round_box,
    check_payload,
)

LEAF_KINDS = frozenset({NodeKind.TEXT, NodeKind.MEDIA, NodeKind.CONTROL, NodeKind.LINK})


class LayoutError(BlueprintError):
    pass


class EmptyInput(LayoutError):
    pass


class InvalidThreshold(LayoutError):
    pass


class TooFewItems(LayoutError):
    pass


@dataclass(frozen=True)
class BoxItem:
    kind: NodeKind
    bbox: BBox
    payload: Payload = Payload()

    def __post_init__(self) -> None:
        if self.kind not in LEAF_KINDS:
            raise LayoutError(f"box items must be leaf kinds, got {self.kind.value}")
        check_payload(self.kind, self.payload)

    def reading_key(self) -> tuple:
        b = self.bbox
        return (round(b.y0, 3), b.x0, b.y1, b.x1, self.kind.value,
                self.payload.type.value, self.payload.value or "")


def parse_boxes(data: bytes | str) -> list[BoxItem]:
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(raw, list):
        raise MalformedJson("box file must be a JSON array")
    items = []
    for entry in raw:
        if not isinstance(entry, dict) or "bbox" not in entry:
            raise MalformedJson(f"bad box item {entry!r}")
        items.append(BoxItem(
            NodeKind.parse(entry.get("kind")),
            _round_box(BBox.parse(entry["bbox"])),
            Payload.from_json(entry.get("payload")),
        ))
    return items


def _gaps(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float, float]]:
    """Whitespace gaps (start, end, width) between merged projected intervals."""
    merged: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    return [(a[1], b[0], b[0] - a[1]) for a, b in zip(merged, merged[1:])]


def _project(items: Sequence[BoxItem], axis: str) -> list[tuple[float, float]]:
    if axis == "y":
        return [(it.bbox.y0, it.bbox.y1) for it in items]
    return [(it.bbox.x0, it.bbox.x1) for it in items]


def _split(items: Sequence[BoxItem], axis: str, gap_threshold: float) -> list[list[BoxItem]]:
    cuts = [(lo + hi) / 2 for lo, hi, width in _gaps(_project(items, axis)) if width > gap_threshold]
    if not cuts:
        return [list(items)]
    groups: list[list[BoxItem]] = [[] for _ in range(len(cuts) + 1)]
    for it in items:
        start = it.bbox.y0 if axis == "y" else it.bbox.x0
        groups[sum(start > c for c in cuts)].append(it)
    return groups


class _Builder:
    def __init__(self, gap_threshold: float) -> None:
        self.gap = gap_threshold
        self.nodes: dict[int, UiNode] = {}
        self.next_id = 0

    def _new_id(self) -> int:
        nid = self.next_id
        self.next_id += 1
        return nid

    def leaf(self, item: BoxItem) -> int:
        nid = self._new_id()
        self.nodes[nid] = UiNode(nid, item.kind, item.payload, (), item.bbox)
        return nid

    def container(self, kind: NodeKind, build_children) -> int:
        nid = self._new_id()  # reserved first so ids stay in preorder
        children = tuple(build_children())
        box = self.nodes[children[0]].bbox
        for c in children[1:]:
            box = box.union(self.nodes[c].bbox)
        self.nodes[nid] = UiNode(nid, kind, Payload(), children, box)
        return nid

    def group(self, items: list[BoxItem], prefer: str) -> int:
        if len(items) == 1:
            return self.leaf(items[0])
        for axis in (prefer, "x" if prefer == "y" else "y"):
            parts = _split(items, axis, self.gap)
            if len(parts) > 1:
                kind = NodeKind.STACK if axis == "y" else NodeKind.ROW
                other = "x" if axis == "y" else "y"
                return self.container(kind, lambda: [self.group(p, other) for p in parts])
        ordered = sorted(items, key=BoxItem.reading_key)
        return self.container(NodeKind.TILE, lambda: [self.leaf(it) for it in ordered])


def group_boxes(items: Sequence[BoxItem], gap_threshold: float) -> UiTree:
    """XY-cut the boxes into a tree rooted at a ``frame``.

    Each level tries its preferred axis first (horizontal cuts at the top,
    since pages scroll vertically), falls back to the other axis, and hands
    the opposite preference to its children. Groups that cannot be cut
    become a ``tile`` whose children follow reading order.
    """
    if not items:
        raise EmptyInput("no boxes to group")
    if not 0.0 < gap_threshold <= 0.5:
        raise InvalidThreshold(f"gap threshold {gap_threshold} outside (0, 0.5]")
    builder = _Builder(gap_threshold)
    # canonical input order so the result is permutation invariant
    ordered = sorted(items, key=BoxItem.reading_key)
    root = builder.container(NodeKind.FRAME, lambda: [builder.group(ordered, "y")])
    tree = UiTree(builder.nodes, root)
    tree.validate()
    return tree


def infer_gap_threshold(items: Sequence[BoxItem]) -> float:
    """Median positive projection gap over both axes, clamped to [0.01, 0.2]."""
    if len(items) < 2:
        raise TooFewItems("need at least two boxes to infer a gap threshold")
    widths = [w for axis in ("y", "x") for _, _, w in _gaps(_project(items, axis)) if w > 0]
    if not widths:
        return 0.01
    return min(0.2, max(0.01, statistics.median(widths)))
