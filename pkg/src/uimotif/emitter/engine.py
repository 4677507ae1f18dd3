"""Constraint engine: syntactic, binding and type masks over emission events.

A ``ConstraintState`` is an immutable value. ``admissible`` asks whether an
event passes all masks; ``step`` applies it or raises.

Besides tag balance, bindings and sinks, the syntactic mask also holds the
markup to the blueprint's shape: every element must realize the next
expected node (page node or skeleton node) with its payload, so no accepted
stream can drop, add or reorder structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional

from ..model import Blueprint, NodeKind, PayloadType, PropSpec, SkeletonNode
from .events import (
    CONTAINER_CLASSES,
    HTML_TAGS,
    SINK_TAG,
    TEXT_TAGS,
    VOID_TAGS,
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

SINK_OF_KIND = {
    NodeKind.TEXT: "text-content",
    NodeKind.MEDIA: "src",
    NodeKind.LINK: "href",
    NodeKind.CONTROL: "placeholder",
}

# structure keys: ("p", node id) page node, ("i", node id) instance site,
# ("s", template id, child path) skeleton node
Key = tuple


@dataclass(frozen=True)
class Expect:
    """What the element realizing one blueprint node must look like."""

    tag: str
    cls: Optional[str] = None
    sink: Optional[str] = None
    value: Optional[str] = None  # constant payload
    prop: Optional[str] = None
    optional: bool = False
    children: tuple[Key, ...] = ()


def _structure(bp: Blueprint) -> dict[Key, Expect]:
    out: dict[Key, Expect] = {}

    def skel(tid: str, node: SkeletonNode, path: tuple, parent: Optional[NodeKind]) -> Key:
        key = ("s", tid, path)
        kids = tuple(skel(tid, c, path + (i,), node.kind) for i, c in enumerate(node.children))
        has_payload = node.prop is not None or node.payload.type is not PayloadType.NONE
        out[key] = Expect(
            element_tag(node.kind, parent),
            node.kind.value if node.kind.is_container else None,
            SINK_OF_KIND.get(node.kind) if has_payload else None,
            node.payload.value if node.prop is None and has_payload else None,
            node.prop, node.optional, kids,
        )
        return key

    for t in bp.templates:
        skel(t.template_id, t.skeleton, (), None)

    def page(nid: int, parent: Optional[NodeKind]) -> Key:
        if nid in bp.instances:
            return ("i", nid)
        n = bp.tree[nid]
        kids = tuple(page(c, n.kind) for c in n.children)
        has_payload = n.payload.type is not PayloadType.NONE
        out[("p", nid)] = Expect(
            element_tag(n.kind, parent),
            n.kind.value if n.kind.is_container else None,
            SINK_OF_KIND.get(n.kind) if has_payload else None,
            n.payload.value if has_payload else None,
            None, False, kids,
        )
        return ("p", nid)

    page(bp.tree.root, None)
    return out


class InadmissibleEvent(Exception):
    pass


@dataclass(frozen=True)
class QEntry:
    """One blueprint instance to be consumed: its bindings and loop position."""

    node_id: int
    values: Mapping[str, Optional[str]]
    group: Optional[int]
    position: int


@dataclass(frozen=True)
class LoopSpec:
    template_id: str
    length: int
    items_ref: str


@dataclass(frozen=True)
class EmissionPlan:
    """Static facts the masks consult; derived from a blueprint and a framework."""

    framework: Framework
    props: Mapping[str, Mapping[str, PropSpec]]
    component_tags: Mapping[str, str]
    component_names: Mapping[str, str]
    definition_paths: Mapping[str, str]
    entry: str
    queue: Mapping[str, tuple[QEntry, ...]]
    groups: tuple[LoopSpec, ...]
    template_order: tuple[str, ...]
    structure: Mapping[Key, Expect]
    instance_template: Mapping[int, str]
    page_root: Key

    @classmethod
    def from_blueprint(cls, bp: Blueprint, mu: Framework) -> "EmissionPlan":
        loop_of = bp.loop_of()
        queue: dict[str, list[QEntry]] = {t.template_id: [] for t in bp.templates}
        for nid in bp.instance_order():
            inst = bp.instances[nid]
            g = loop_of.get(nid)
            pos = bp.loop_groups[g].instances.index(nid) if g is not None else 0
            values = {k: (v.value if v is not None else None) for k, v in inst.binding.items()}
            queue[inst.template_id].append(QEntry(nid, values, g, pos))
        component = mu is not Framework.HTML
        return cls(
            framework=mu,
            props={t.template_id: {p.name: p for p in t.props} for t in bp.templates},
            component_tags={component_tag(t, mu): t.template_id for t in bp.templates} if component else {},
            component_names={t.name: t.template_id for t in bp.templates} if not component else {},
            definition_paths={definition_path(t, mu): t.template_id for t in bp.templates} if component else {},
            entry=entry_path(mu),
            queue={k: tuple(v) for k, v in queue.items()},
            groups=tuple(
                LoopSpec(g.template_id, len(g.instances), items_ref(i)) for i, g in enumerate(bp.loop_groups)
            ),
            template_order=tuple(t.template_id for t in bp.templates),
            structure=_structure(bp),
            instance_template={n: i.template_id for n, i in bp.instances.items()},
            page_root=("p", bp.tree.root),
        )


@dataclass(frozen=True)
class Element:
    tag: str
    in_attrs: bool = True
    attrs: frozenset = frozenset()
    has_text: bool = False
    component: bool = False
    optional_prop: Optional[str] = None
    key: Optional[Key] = None  # structure key realized; None for component references
    cursor: int = 0  # expected children emitted so far
    instance: Optional[int] = None  # node id when this element is an instance site


@dataclass(frozen=True)
class Scope:
    """Binding ledger of one template instance (``use``) or definition (``def``)."""

    template_id: str
    mode: str
    anchor: int  # stack index of the anchoring element; -1 for a whole file
    entry: Optional[QEntry] = None
    bound: frozenset = frozenset()


@dataclass(frozen=True)
class LoopState:
    group: int
    anchor: int
    opened: int = 0


@dataclass(frozen=True)
class ConstraintState:
    plan: EmissionPlan
    file: Optional[str] = None
    files_done: frozenset = frozenset()
    file_roots: int = 0
    stack: tuple[Element, ...] = ()
    scopes: tuple[Scope, ...] = ()
    consumed: Mapping[str, int] = field(default_factory=dict)
    loop: Optional[LoopState] = None
    loops_done: frozenset = frozenset()

    @classmethod
    def initial(cls, bp: Blueprint, mu: Framework) -> "ConstraintState":
        plan = EmissionPlan.from_blueprint(bp, mu)
        return cls(plan, consumed={t: 0 for t in plan.template_order})

    # ledger view: delta indicators per open scope
    def ledger(self) -> list[tuple[str, dict[str, bool]]]:
        return [
            (s.template_id, {name: name in s.bound for name in self.plan.props[s.template_id]})
            for s in self.scopes
        ]


def _fail(reason: str):
    raise InadmissibleEvent(reason)


def _leave_attrs(state: ConstraintState, stack: tuple[Element, ...]) -> tuple[Element, ...]:
    if not stack or not stack[-1].in_attrs:
        return stack
    top = stack[-1]
    if top.tag == "div" and "class" not in top.attrs:
        _fail("div closed its attribute list without a class")
    if top.instance is not None and not top.component and "data-template" not in top.attrs:
        _fail("replicated instance root lacks its data-template marker")
    exp = state.plan.structure[top.key] if top.key is not None else None
    defining = bool(state.scopes) and state.scopes[-1].mode == "def"
    if exp is not None and exp.optional and defining and "data-optional" not in top.attrs:
        _fail("optional element in a definition lacks its data-optional marker")
    return stack[:-1] + (replace(top, in_attrs=False),)


def _next_child(plan: EmissionPlan, el: Element) -> Optional[Key]:
    kids = plan.structure[el.key].children if el.key is not None else ()
    return kids[el.cursor] if el.cursor < len(kids) else None


def _advance(stack: tuple[Element, ...]) -> tuple[Element, ...]:
    return stack[:-1] + (replace(stack[-1], cursor=stack[-1].cursor + 1),)


def _scope_complete(state: ConstraintState, scope: Scope) -> bool:
    return len(scope.bound) == len(state.plan.props[scope.template_id])


def _open_instance(state: ConstraintState, tid: str, anchor: int, nid: Optional[int]) -> tuple[Scope, dict]:
    k = state.consumed[tid]
    queue = state.plan.queue[tid]
    if k >= len(queue):
        _fail(f"no instance of {tid} left to emit")
    if queue[k].node_id != nid:
        _fail(f"instance of {tid} emitted out of order")
    if state.scopes:
        _fail("instances cannot nest")
    consumed = dict(state.consumed)
    consumed[tid] = k + 1
    return Scope(tid, "use", anchor, queue[k]), consumed


def _transition(state: ConstraintState, ev: Event) -> ConstraintState:
    plan = state.plan
    mu = plan.framework
    stack = state.stack
    top = stack[-1] if stack else None

    if isinstance(ev, FileStart):
        if state.file is not None:
            _fail("file blocks cannot nest")
        if ev.path in state.files_done:
            _fail(f"file {ev.path} already emitted")
        if ev.path == plan.entry:
            return replace(state, file=ev.path, file_roots=0)
        if ev.path in plan.definition_paths:
            scope = Scope(plan.definition_paths[ev.path], "def", -1)
            return replace(state, file=ev.path, file_roots=0, scopes=(scope,))
        _fail(f"unexpected file {ev.path}")

    if state.file is None:
        _fail(f"{type(ev).__name__} outside a file block")

    if isinstance(ev, FileEnd):
        if stack or state.loop is not None:
            _fail("file ended with open elements or loop")
        if state.file_roots != 1:
            _fail("a file holds exactly one root element")
        scopes = state.scopes
        if scopes:
            if scopes[-1].mode != "def" or not _scope_complete(state, scopes[-1]):
                _fail("file ended with unbound props")
            scopes = scopes[:-1]
        if state.file == plan.entry:
            if any(state.consumed[t] != len(plan.queue[t]) for t in plan.template_order):
                _fail("entry file ended before every instance was emitted")
            if mu is not Framework.HTML and len(state.loops_done) != len(plan.groups):
                _fail("entry file ended before every loop was emitted")
        return replace(state, file=None, files_done=state.files_done | {state.file}, scopes=scopes)

    if isinstance(ev, OpenTag):
        is_component = ev.name in plan.component_tags
        if not is_component and ev.name not in HTML_TAGS:
            _fail(f"unknown tag {ev.name}")
        instance = None
        if top is None:
            if state.file_roots:
                _fail("second root element in file")
            if is_component:
                _fail("a component cannot be the page root")
            key = plan.page_root if state.file == plan.entry else ("s", state.scopes[-1].template_id, ())
        else:
            if top.component or top.tag in VOID_TAGS or top.tag in TEXT_TAGS:
                _fail(f"<{top.tag}> cannot have element children")
            if top.tag == "a" and ev.name != "span":
                _fail("links may only contain span text")
            nxt = _next_child(plan, top)
            if nxt is None:
                _fail(f"<{top.tag}> expects no further children")
            if nxt[0] == "i":
                instance = nxt[1]
                tid = plan.instance_template[instance]
                if mu is Framework.HTML:
                    key = ("s", tid, ())
                else:
                    key = None
                    if plan.component_tags.get(ev.name) != tid:
                        _fail(f"expected a reference to {tid}, got <{ev.name}>")
            else:
                key = nxt
                if is_component:
                    _fail("component reference where plain markup is expected")
                exp = plan.structure[key]
                scope = state.scopes[-1] if state.scopes else None
                if exp.optional and scope is not None and scope.mode == "use" and scope.entry.values[exp.prop] is None:
                    _fail(f"optional {exp.prop} is absent in this instance")
            stack = _advance(_leave_attrs(state, stack))
        if key is not None and plan.structure[key].tag != ev.name:
            _fail(f"expected <{plan.structure[key].tag}>, got <{ev.name}>")
        loop, consumed, scopes = state.loop, state.consumed, state.scopes
        in_loop_body = loop is not None and len(stack) == loop.anchor
        if is_component:
            if state.file != plan.entry:
                _fail("components are only referenced from the entry file")
            tid = plan.component_tags[ev.name]
            k = state.consumed[tid]
            if k >= len(plan.queue[tid]):
                _fail(f"no instance of {tid} left to emit")
            q = plan.queue[tid][k]
            if q.group is not None:
                if loop is None or loop.group != q.group or not in_loop_body:
                    _fail("loop member emitted outside its loop")
            elif loop is not None:
                _fail("non-loop instance inside a loop")
            scope, consumed = _open_instance(state, tid, len(stack), instance)
            scopes = scopes + (scope,)
            if loop is not None:
                loop = replace(loop, opened=loop.opened + 1)
        elif in_loop_body:
            _fail("loop bodies contain only the component reference")
        return replace(
            state,
            stack=stack + (Element(ev.name, component=is_component, key=key, instance=instance),),
            file_roots=state.file_roots + (1 if top is None else 0),
            scopes=scopes, consumed=consumed, loop=loop,
        )

    if isinstance(ev, CloseTag):
        if top is None or top.tag != ev.name:
            _fail(f"</{ev.name}> does not match <{top.tag if top else None}>")
        stack = _leave_attrs(state, stack)
        if top.key is not None:
            exp = plan.structure[top.key]
            if top.cursor != len(exp.children):
                _fail(f"<{top.tag}> closed before all its children were emitted")
            if exp.sink is not None:
                placed = top.has_text if exp.sink == "text-content" else exp.sink in top.attrs
                if not placed:
                    _fail(f"<{top.tag}> closed without its {exp.sink} payload")
        scopes = state.scopes
        if scopes and scopes[-1].anchor == len(stack) - 1:
            if not _scope_complete(state, scopes[-1]):
                _fail(f"instance of {scopes[-1].template_id} closed with unbound props")
            scopes = scopes[:-1]
        return replace(state, stack=stack[:-1], scopes=scopes)

    if isinstance(ev, Attr):
        if top is None or not top.in_attrs:
            _fail("attribute outside an open tag")
        if top.component:
            _fail("component references take props, not attributes")
        if ev.name in top.attrs:
            _fail(f"duplicate attribute {ev.name}")
        scopes, consumed = state.scopes, state.consumed
        optional_prop = top.optional_prop
        exp = plan.structure[top.key]
        if ev.name == "class":
            if top.tag != "div" or ev.value not in CONTAINER_CLASSES:
                _fail(f"class={ev.value!r} not allowed on <{top.tag}>")
            if ev.value != exp.cls:
                _fail(f"class={ev.value!r} does not match the blueprint node")
        elif ev.name in SINK_TAG:
            if top.tag != SINK_TAG[ev.name]:
                _fail(f"{ev.name} not allowed on <{top.tag}>")
            if exp.sink != ev.name or exp.prop is not None or exp.value != ev.value:
                _fail(f"{ev.name}={ev.value!r} does not match the blueprint payload")
        elif ev.name == "data-template":
            if mu is not Framework.HTML or ev.value not in plan.component_names:
                _fail(f"data-template={ev.value!r} not allowed")
            tid = plan.component_names[ev.value]
            if top.instance is None or plan.instance_template[top.instance] != tid:
                _fail(f"this element is not an instance of {ev.value}")
            scope, consumed = _open_instance(state, tid, len(stack) - 1, top.instance)
            scopes = scopes + (scope,)
        elif ev.name == "data-optional":
            scope = scopes[-1] if scopes else None
            if scope is None or scope.mode != "def":
                _fail("optional markers only appear in component definitions")
            spec = plan.props[scope.template_id].get(ev.value)
            if spec is None or not spec.optional:
                _fail(f"{ev.value} is not an optional prop")
            if not exp.optional or exp.prop != ev.value:
                _fail(f"data-optional={ev.value!r} on the wrong element")
            optional_prop = ev.value
        else:
            _fail(f"unknown attribute {ev.name}")
        new_top = replace(top, attrs=top.attrs | {ev.name}, optional_prop=optional_prop)
        return replace(state, stack=stack[:-1] + (new_top,), scopes=scopes, consumed=consumed)

    if isinstance(ev, TextContent):
        if top is None or top.tag not in TEXT_TAGS or top.has_text:
            _fail("text content only once inside p/span")
        exp = plan.structure[top.key]
        if exp.sink != "text-content" or exp.prop is not None or exp.value != ev.value:
            _fail("text content does not match the blueprint payload")
        stack = _leave_attrs(state, stack)
        return replace(state, stack=stack[:-1] + (replace(stack[-1], has_text=True),))

    if isinstance(ev, BindProp):
        return _bind(state, ev)

    if isinstance(ev, LoopStart):
        if mu is Framework.HTML:
            _fail("HTML replicates loops instead of emitting loop constructs")
        if state.file != plan.entry or state.loop is not None or state.scopes:
            _fail("loops start only in the entry body, unnested")
        if top is None or top.tag != "div":
            _fail("loops live inside a container element")
        tid = ev.template_id
        if tid not in plan.queue or state.consumed[tid] >= len(plan.queue[tid]):
            _fail(f"no pending instance of {tid}")
        q = plan.queue[tid][state.consumed[tid]]
        if q.group is None or q.position != 0 or q.group in state.loops_done:
            _fail("next instance does not start a loop group")
        if _next_child(plan, top) != ("i", q.node_id):
            _fail("loop does not start at the expected child position")
        if plan.groups[q.group].items_ref != ev.items_ref:
            _fail(f"items reference {ev.items_ref} does not name group {q.group}")
        stack = _leave_attrs(state, stack)
        return replace(state, stack=stack, loop=LoopState(q.group, len(stack)))

    if isinstance(ev, LoopEnd):
        loop = state.loop
        if loop is None or len(stack) != loop.anchor:
            _fail("LoopEnd without an open loop at this depth")
        if loop.opened != plan.groups[loop.group].length:
            _fail("loop ended before every member was emitted")
        return replace(state, loop=None, loops_done=state.loops_done | {loop.group})

    _fail(f"unknown event {ev!r}")


def _bind(state: ConstraintState, ev: BindProp) -> ConstraintState:
    if not state.scopes:
        _fail("BindProp outside a template instance")
    scope = state.scopes[-1]
    if scope.template_id != ev.template_id:
        _fail("BindProp for a template that is not the innermost open instance")
    spec = state.plan.props[scope.template_id].get(ev.prop_name)
    if spec is None:
        _fail(f"unknown prop {ev.prop_name}")
    if ev.prop_name in scope.bound:
        _fail(f"prop {ev.prop_name} already bound")
    # type mask
    if ev.sink not in spec.sinks:
        _fail(f"{spec.prop_type.value} prop {ev.prop_name} cannot flow into {ev.sink}")
    stack = state.stack
    if not stack:
        _fail("BindProp outside any element")
    top = stack[-1]
    if scope.mode == "use":
        if ev.value != scope.entry.values[ev.prop_name]:
            _fail(f"value for {ev.prop_name} does not match the blueprint binding")
        if top.component:
            if len(stack) - 1 != scope.anchor or not top.in_attrs:
                _fail("component props bind inside the reference tag")
            return _mark(state, scope, ev, stack)
        if ev.value is None:
            # absent optional leaf in replicated markup: stands in for the element
            nxt = _next_child(state.plan, top)
            exp = state.plan.structure.get(nxt) if nxt is not None and nxt[0] == "s" else None
            if exp is None or not exp.optional or exp.prop != ev.prop_name:
                _fail(f"absent {ev.prop_name} does not stand at the expected child position")
            return _mark(state, scope, ev, _advance(_leave_attrs(state, stack)))
    else:
        if ev.value is not None:
            _fail("definitions bind prop references, not values")
        if spec.optional and top.optional_prop != ev.prop_name:
            _fail(f"optional prop {ev.prop_name} must sit on its guarded element")
    if top.key is None or state.plan.structure[top.key].prop != ev.prop_name:
        _fail(f"{ev.prop_name} does not belong on this element")
    # sink must fit the element it lands on
    if ev.sink == "text-content":
        if top.tag not in TEXT_TAGS or top.has_text:
            _fail("text-content sink needs an empty p/span")
        stack = _leave_attrs(state, stack)
        stack = stack[:-1] + (replace(stack[-1], has_text=True),)
    else:
        if not top.in_attrs or SINK_TAG.get(ev.sink) != top.tag or ev.sink in top.attrs:
            _fail(f"{ev.sink} sink does not fit <{top.tag}>")
        stack = stack[:-1] + (replace(top, attrs=top.attrs | {ev.sink}),)
    return _mark(state, scope, ev, stack)


def _mark(state: ConstraintState, scope: Scope, ev: BindProp, stack) -> ConstraintState:
    new_scope = replace(scope, bound=scope.bound | {ev.prop_name})
    return replace(state, stack=stack, scopes=state.scopes[:-1] + (new_scope,))


def admissible(state: ConstraintState, event: Event) -> bool:
    try:
        _transition(state, event)
    except InadmissibleEvent:
        return False
    return True


def step(state: ConstraintState, event: Event) -> ConstraintState:
    """Apply an admissible event; raises ``InadmissibleEvent`` otherwise."""
    return _transition(state, event)


def is_complete(state: ConstraintState) -> bool:
    plan = state.plan
    if state.file is not None or state.stack or state.scopes or state.loop is not None:
        return False
    if any(state.consumed[t] != len(plan.queue[t]) for t in plan.template_order):
        return False
    if plan.framework is not Framework.HTML:
        if len(state.loops_done) != len(plan.groups):
            return False
        if not set(plan.definition_paths) <= state.files_done:
            return False
    return True


def replay(bp: Blueprint, mu: Framework, events) -> ConstraintState:
    state = ConstraintState.initial(bp, mu)
    for i, ev in enumerate(events):
        try:
            state = step(state, ev)
        except InadmissibleEvent as exc:
            raise InadmissibleEvent(f"event {i} {ev!r}: {exc}") from None
    return state
