"""Reference event stream for a blueprint and target framework."""
from __future__ import annotations

from typing import Optional

from ..model import Blueprint, NodeKind, PayloadType, SkeletonNode, Template
from .engine import InadmissibleEvent, replay
from .events import (
    Attr,
    BindProp,
    CloseTag,
    Event,
    FileEnd,
    FileStart,
    Framework,
    LoopEnd,
    LoopStart,
    OpenTag,
    TextContent,
    component_tag,
    definition_path,
    element_tag,
    entry_path,
    items_ref,
)


class InternalConstraintViolation(RuntimeError):
    """The reference stream was rejected by the constraint engine."""


# sink a payload kind is placed into
SINK_OF_KIND = {
    NodeKind.TEXT: "text-content",
    NodeKind.MEDIA: "src",
    NodeKind.LINK: "href",
    NodeKind.CONTROL: "placeholder",
}


def _payload_events(kind: NodeKind, value: str) -> list[Event]:
    sink = SINK_OF_KIND[kind]
    return [TextContent(value)] if sink == "text-content" else [Attr(sink, value)]


def _skeleton_events(
    node: SkeletonNode, parent: Optional[NodeKind], tmpl: Template,
    binding: Optional[dict], marker: Optional[str] = None, is_root: bool = True,
) -> list[Event]:
    """Events for one skeleton; ``binding`` None means a component definition."""
    if node.prop is not None and binding is not None and binding[node.prop] is None:
        return [BindProp(tmpl.template_id, node.prop, SINK_OF_KIND[node.kind], None)]
    tag = element_tag(node.kind, parent)
    out: list[Event] = [OpenTag(tag)]
    if node.kind.is_container:
        out.append(Attr("class", node.kind.value))
    if is_root and marker is not None:
        out.append(Attr("data-template", marker))
    if node.optional and binding is None:
        out.append(Attr("data-optional", node.prop))
    if node.prop is not None:
        value = None if binding is None else binding[node.prop].value
        out.append(BindProp(tmpl.template_id, node.prop, SINK_OF_KIND[node.kind], value))
    elif node.payload.type is not PayloadType.NONE:
        out.extend(_payload_events(node.kind, node.payload.value))
    for child in node.children:
        out.extend(_skeleton_events(child, node.kind, tmpl, binding, is_root=False))
    out.append(CloseTag(tag))
    return out


def _use_site(tmpl: Template, binding: dict, mu: Framework) -> list[Event]:
    tag = component_tag(tmpl, mu)
    out: list[Event] = [OpenTag(tag)]
    for node in tmpl.skeleton.iter():
        if node.prop is not None:
            payload = binding[node.prop]
            out.append(BindProp(
                tmpl.template_id, node.prop, SINK_OF_KIND[node.kind],
                payload.value if payload is not None else None,
            ))
    out.append(CloseTag(tag))
    return out


def _page_events(bp: Blueprint, mu: Framework) -> list[Event]:
    tree = bp.tree
    loop_of = bp.loop_of()
    out: list[Event] = []

    def visit(nid: int, parent: Optional[NodeKind]) -> None:
        if nid in bp.instances:
            inst = bp.instances[nid]
            tmpl = bp.template(inst.template_id)
            if mu is Framework.HTML:
                out.extend(_skeleton_events(tmpl.skeleton, parent, tmpl, dict(inst.binding), marker=tmpl.name))
                return
            g = loop_of.get(nid)
            if g is None:
                out.extend(_use_site(tmpl, dict(inst.binding), mu))
            elif bp.loop_groups[g].instances[0] == nid:
                out.append(LoopStart(tmpl.template_id, items_ref(g)))
                for member in bp.loop_groups[g].instances:
                    out.extend(_use_site(tmpl, dict(bp.instances[member].binding), mu))
                out.append(LoopEnd())
            return
        node = tree[nid]
        tag = element_tag(node.kind, parent)
        out.append(OpenTag(tag))
        if node.kind.is_container:
            out.append(Attr("class", node.kind.value))
        if node.payload.type is not PayloadType.NONE:
            out.extend(_payload_events(node.kind, node.payload.value))
        for c in node.children:
            visit(c, node.kind)
        out.append(CloseTag(tag))

    visit(tree.root, None)
    return out


def dispatch(bp: Blueprint, mu: Framework) -> list[Event]:
    """Deterministic reference stream: component files (sorted by path), then the entry."""
    events: list[Event] = []
    if mu is not Framework.HTML:
        defs = sorted((definition_path(t, mu), t) for t in bp.templates)
        for path, tmpl in defs:
            events.append(FileStart(path))
            events.extend(_skeleton_events(tmpl.skeleton, None, tmpl, None))
            events.append(FileEnd())
    events.append(FileStart(entry_path(mu)))
    events.extend(_page_events(bp, mu))
    events.append(FileEnd())
    try:
        replay(bp, mu, events)
    except InadmissibleEvent as exc:
        raise InternalConstraintViolation(str(exc)) from None
    return events
