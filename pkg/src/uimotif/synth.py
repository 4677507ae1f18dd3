"""Seeded synthetic documents with known repeated cards and loop groups."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass

from .layout import BoxItem
from .model import BBox, NodeKind, PayloadType, UiTree, build_tree, image, placeholder, text, url

# leaf-kind sequences for card bodies; any two differ by at least one edit on
# trees of at most five nodes, so no pair is a near duplicate at the default
# merge threshold
CARD_SHAPES = (
    ("media", "text"),
    ("media", "text", "text"),
    ("text", "text", "link"),
    ("control", "text"),
    ("media", "text", "link"),
    ("text", "media"),
    ("text", "link"),
    ("media", "text", "text", "link"),
    ("link", "media"),
    ("control", "control", "text"),
)

_WORDS = ("alpha", "beta", "gamma", "delta", "omega", "north", "south", "amber", "cedar",
          "delta", "ember", "fjord", "grove", "harbor", "iris", "juniper", "kite", "lumen")


@dataclass(frozen=True)
class SynthDoc:
    name: str
    tree: UiTree
    loop_sizes: tuple[int, ...]


def _word(rng: random.Random, n: int = 2) -> str:
    return " ".join(rng.choice(_WORDS) for _ in range(n))


def _leaf(rng: random.Random, kind: str, serial: int):
    if kind == "text":
        return ("text", text(f"{_word(rng)} {serial}"))
    if kind == "media":
        return ("media", image(f"/img/{serial}.png"))
    if kind == "link":
        return ("link", url(f"/go/{serial}"))
    return ("control", placeholder(f"{_word(rng, 1)} {serial}"))


def _card(rng: random.Random, shape: tuple[str, ...], serial: int):
    return ("tile", [_leaf(rng, k, serial * 10 + i) for i, k in enumerate(shape)])


def _section(rng, shape, count, serial):
    cards = [_card(rng, shape, serial * 100 + i) for i in range(count)]
    kids = [("text", text(f"section {serial} {_word(rng)}")), ("row", cards)]
    for i in range(rng.randrange(3)):
        kids.append(("text", text(f"note {serial}.{i}")))
    return ("stack", kids)


def synth_document(seed: int, min_nodes: int = 20, max_nodes: int = 200) -> SynthDoc:
    """One page: a frame of sections, each a heading plus a row of identical cards."""
    rng = random.Random(seed)
    while True:
        n_sections = rng.randint(1, 5)
        shapes = rng.sample(CARD_SHAPES, n_sections)
        counts = [rng.randint(2, 7) for _ in shapes]
        spec = ("frame", [_section(rng, s, c, i) for i, (s, c) in enumerate(zip(shapes, counts))])
        tree = build_tree(spec)
        if min_nodes <= len(tree) <= max_nodes:
            return SynthDoc(f"doc{seed:03d}", tree, tuple(counts))


def synth_corpus(n: int = 25, seed: int = 0) -> list[SynthDoc]:
    return [synth_document(seed * 1000 + i) for i in range(n)]


def large_tree(target: int = 10_000, seed: int = 7) -> UiTree:
    """A page of roughly ``target`` nodes built from many card sections."""
    rng = random.Random(seed)
    sections = []
    size = 1
    serial = 0
    while size < target:
        shape = CARD_SHAPES[serial % len(CARD_SHAPES)]
        count = rng.randint(2, 12)
        sec = _section(rng, shape, count, serial)
        sections.append(sec)
        size += 2 + len(sec[1]) - 1 + count * (1 + len(shape))
        serial += 1
    return build_tree(("frame", sections))


def _box(x0: float, y0: float, x1: float, y1: float) -> BBox:
    # six decimals, as in the file format, so written boxes read back unchanged
    return BBox(*(round(v, 6) for v in (x0, y0, x1, y1)))


def demo_boxes(seed: int = 0, rows: int = 2, cols: int = 3) -> list[BoxItem]:
    """Detector-style boxes for a title above a grid of image+caption cards."""
    rng = random.Random(seed)
    items = [BoxItem(NodeKind.TEXT, BBox(0.05, 0.02, 0.95, 0.08), text("Catalog"))]
    cell_w, cell_h = 0.9 / cols, 0.8 / rows
    for r in range(rows):
        for c in range(cols):
            x0 = 0.05 + c * cell_w
            y0 = 0.15 + r * cell_h
            n = r * cols + c
            items.append(BoxItem(NodeKind.MEDIA, _box(x0, y0, x0 + cell_w * 0.8, y0 + cell_h * 0.55),
                                 image(f"/img/item{n}.png")))
            items.append(BoxItem(NodeKind.TEXT, _box(x0, y0 + cell_h * 0.6, x0 + cell_w * 0.8, y0 + cell_h * 0.75),
                                 text(f"{_word(rng)} {n}")))
    return items


def boxes_to_json(items: list[BoxItem]) -> str:
    out = []
    for it in items:
        entry = {"kind": it.kind.value, "bbox": it.bbox.as_list()}
        if it.payload.type is not PayloadType.NONE:
            entry["payload"] = it.payload.to_json()
        out.append(entry)
    return json.dumps(out, indent=2) + "\n"


def write_corpus(directory, n: int = 25, seed: int = 0) -> list[str]:
    """Write ``n`` synthetic documents as template-free blueprint files."""
    from pathlib import Path

    from .model import Blueprint, serialize_blueprint

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    names = []
    for doc in synth_corpus(n, seed):
        name = f"{doc.name}.json"
        (out / name).write_bytes(serialize_blueprint(Blueprint(doc.tree)))
        names.append(name)
    return names
