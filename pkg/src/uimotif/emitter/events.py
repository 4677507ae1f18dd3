"""Emission event alphabet and framework naming conventions."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from ..model import NodeKind, Template


class Framework(str, enum.Enum):
    HTML = "html"
    REACT = "react"
    VUE = "vue"
    ANGULAR = "angular"

    @classmethod
    def parse(cls, raw: str) -> "Framework":
        try:
            return cls(raw.lower())
        except ValueError:
            raise ValueError(f"unsupported framework {raw!r}") from None


@dataclass(frozen=True)
class OpenTag:
    name: str


@dataclass(frozen=True)
class CloseTag:
    name: str


@dataclass(frozen=True)
class Attr:
    name: str
    value: str


@dataclass(frozen=True)
class TextContent:
    value: str


@dataclass(frozen=True)
class BindProp:
    template_id: str
    prop_name: str
    sink: str
    value: Optional[str]


@dataclass(frozen=True)
class LoopStart:
    template_id: str
    items_ref: str


@dataclass(frozen=True)
class LoopEnd:
    pass


@dataclass(frozen=True)
class FileStart:
    path: str


@dataclass(frozen=True)
class FileEnd:
    pass


Event = Union[OpenTag, CloseTag, Attr, TextContent, BindProp, LoopStart, LoopEnd, FileStart, FileEnd]


@dataclass(frozen=True)
class CodeBundle:
    framework: Framework
    files: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        paths = [p for p, _ in self.files]
        if not paths:
            raise ValueError("empty bundle")
        if len(set(paths)) != len(paths):
            raise ValueError("duplicate paths in bundle")
        if entry_path(self.framework) not in paths:
            raise ValueError("bundle has no entry file")

    def get(self, path: str) -> str:
        return dict(self.files)[path]

    @property
    def entry(self) -> str:
        return self.get(entry_path(self.framework))


# element tags of the dialect, per node kind
CONTAINER_TAG = "div"
TAG_OF_KIND = {
    NodeKind.FRAME: "div", NodeKind.STACK: "div", NodeKind.ROW: "div", NodeKind.TILE: "div",
    NodeKind.TEXT: "p", NodeKind.MEDIA: "img", NodeKind.CONTROL: "input", NodeKind.LINK: "a",
}
VOID_TAGS = frozenset({"img", "input"})
TEXT_TAGS = frozenset({"p", "span"})
HTML_TAGS = frozenset({"div", "p", "span", "img", "input", "a"})
# which element accepts which attribute sink
SINK_TAG = {"src": "img", "href": "a", "placeholder": "input"}
CONTAINER_CLASSES = frozenset({"frame", "stack", "row", "tile"})


def element_tag(kind: NodeKind, parent_kind: Optional[NodeKind]) -> str:
    if kind is NodeKind.TEXT and parent_kind is NodeKind.LINK:
        return "span"
    return TAG_OF_KIND[kind]


def component_tag(template: Template, mu: Framework) -> str:
    if mu is Framework.ANGULAR:
        return "app-" + template.name.lower().replace("_", "-")
    return template.name


def angular_class(name: str) -> str:
    kind, digest = name.split("_")
    return f"{kind}{digest.capitalize()}Component"


def definition_path(template: Template, mu: Framework) -> str:
    if mu is Framework.REACT:
        return f"components/{template.name}.tsx"
    if mu is Framework.VUE:
        return f"components/{template.name}.vue"
    if mu is Framework.ANGULAR:
        return f"components/{template.name.lower().replace('_', '-')}.component.html"
    raise ValueError("HTML bundles have no component files")


def entry_path(mu: Framework) -> str:
    return {
        Framework.HTML: "index.html",
        Framework.REACT: "App.tsx",
        Framework.VUE: "App.vue",
        Framework.ANGULAR: "app.component.html",
    }[mu]


def items_ref(index: int) -> str:
    return f"items{index}"
