"""Textual realization of a validated event stream."""
from __future__ import annotations

import html
import json
import posixpath
from dataclasses import dataclass, field
from typing import Optional, Union

from ..model import Blueprint
from .engine import InadmissibleEvent, is_complete, replay
from .events import (
    VOID_TAGS,
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
    angular_class,
    entry_path,
)


class IncompleteStream(Exception):
    """The event stream does not reach a complete, constraint-satisfying state."""


@dataclass
class Node:
    tag: str
    attrs: dict[str, str] = field(default_factory=dict)
    binds: list[BindProp] = field(default_factory=list)
    children: list[Union["Node", "Loop", str]] = field(default_factory=list)

    @property
    def optional(self) -> Optional[str]:
        return self.attrs.get("data-optional")


@dataclass
class Loop:
    template_id: str
    ref: str
    items: list[Node] = field(default_factory=list)


def _build_files(events: list[Event]) -> list[tuple[str, Node]]:
    files: list[tuple[str, Node]] = []
    stack: list[Union[Node, Loop]] = []
    path = None
    root = None
    for ev in events:
        if isinstance(ev, FileStart):
            path, root, stack = ev.path, None, []
        elif isinstance(ev, FileEnd):
            files.append((path, root))
        elif isinstance(ev, OpenTag):
            node = Node(ev.name)
            if not stack:
                root = node
            elif isinstance(stack[-1], Loop):
                stack[-1].items.append(node)
            else:
                stack[-1].children.append(node)
            stack.append(node)
        elif isinstance(ev, CloseTag):
            stack.pop()
        elif isinstance(ev, Attr):
            stack[-1].attrs[ev.name] = ev.value
        elif isinstance(ev, TextContent):
            stack[-1].children.append(ev.value)
        elif isinstance(ev, BindProp):
            stack[-1].binds.append(ev)
        elif isinstance(ev, LoopStart):
            loop = Loop(ev.template_id, ev.items_ref)
            stack[-1].children.append(loop)
            stack.append(loop)
        elif isinstance(ev, LoopEnd):
            stack.pop()
    return files


def escape_text(value: str) -> str:
    # braces are template syntax in JSX, Vue and Angular
    return html.escape(value, quote=False).replace("{", "&#123;").replace("}", "&#125;")


def escape_attr(value: str) -> str:
    return html.escape(value, quote=True).replace("{", "&#123;").replace("}", "&#125;")


def _js(value: Optional[str]) -> str:
    return "null" if value is None else json.dumps(value, ensure_ascii=False)


class _Printer:
    """Framework-specific markup printer; subclasses override the hooks."""

    class_attr = "class"

    def __init__(self) -> None:
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append("  " * depth + text)

    def attr_items(self, node: Node) -> list[str]:
        parts = []
        for name, value in node.attrs.items():
            if name == "data-optional":
                continue
            key = self.class_attr if name == "class" else name
            parts.append(f'{key}="{escape_attr(value)}"')
        for b in node.binds:
            if b.sink != "text-content":
                parts.extend(self.bind_attr(b))
        guard = node.optional
        if guard is not None:
            parts.extend(self.guard_attr(guard))
        return sorted(parts)

    def bind_attr(self, b: BindProp) -> list[str]:
        raise NotImplementedError

    def bind_text(self, b: BindProp) -> str:
        raise NotImplementedError

    def guard_attr(self, prop: str) -> list[str]:
        return []

    def open_text(self, node: Node) -> str:
        attrs = self.attr_items(node)
        return "<" + " ".join([node.tag] + attrs)

    def element(self, node: Node, depth: int) -> None:
        head = self.open_text(node)
        if node.tag in VOID_TAGS:
            self.emit(depth, head + " />")
            return
        texts = [escape_text(c) for c in node.children if isinstance(c, str)]
        texts += [self.bind_text(b) for b in node.binds if b.sink == "text-content"]
        kids = [c for c in node.children if not isinstance(c, str)]
        if not kids:
            self.emit(depth, f"{head}>{''.join(texts)}</{node.tag}>")
            return
        self.emit(depth, head + ">")
        for kid in kids:
            if isinstance(kid, Loop):
                self.loop(kid, depth + 1)
            else:
                self.child(kid, depth + 1)
        self.emit(depth, f"</{node.tag}>")

    def child(self, node: Node, depth: int) -> None:
        self.element(node, depth)

    def loop(self, loop: Loop, depth: int) -> None:
        raise NotImplementedError


# --- HTML -------------------------------------------------------------------


class _HtmlPrinter(_Printer):
    def bind_attr(self, b):
        return [] if b.value is None else [f'{b.sink}="{escape_attr(b.value)}"']

    def bind_text(self, b):
        return "" if b.value is None else escape_text(b.value)


def _render_html(files: list[tuple[str, Node]]) -> list[tuple[str, str]]:
    (path, root), = files
    p = _HtmlPrinter()
    p.lines = [
        "<!DOCTYPE html>",
        '<html lang="en">',
        "  <head>",
        '    <meta charset="utf-8" />',
        "    <title>index</title>",
        "  </head>",
        "  <body>",
    ]
    p.element(root, 2)
    p.lines += ["  </body>", "</html>"]
    return [(path, "\n".join(p.lines) + "\n")]


# --- shared helpers for component frameworks -------------------------------


@dataclass
class _PropDecl:
    name: str
    optional: bool


def _declared_props(root: Node) -> list[_PropDecl]:
    out = []

    def visit(node: Node) -> None:
        for b in node.binds:
            out.append(_PropDecl(b.prop_name, node.optional == b.prop_name))
        for c in node.children:
            if isinstance(c, Node):
                visit(c)

    visit(root)
    return out


def _record(node: Node) -> str:
    return "{ " + ", ".join(f"{b.prop_name}: {_js(b.value)}" for b in node.binds) + " }"


def _component_names(root: Node, known: set[str]) -> list[str]:
    found: set[str] = set()

    def visit(node) -> None:
        if isinstance(node, Loop):
            for it in node.items:
                found.add(it.tag)
            return
        if isinstance(node, Node):
            if node.tag in known:
                found.add(node.tag)
            for c in node.children:
                visit(c)

    visit(root)
    return sorted(found)


def _loops(root: Node) -> list[Loop]:
    out: list[Loop] = []

    def visit(node) -> None:
        if isinstance(node, Loop):
            out.append(node)
        elif isinstance(node, Node):
            for c in node.children:
                visit(c)

    visit(root)
    return out


# --- React --------------------------------------------------------------------


class _ReactPrinter(_Printer):
    class_attr = "className"

    def __init__(self, components: frozenset = frozenset()) -> None:
        super().__init__()
        self.components = components

    def bind_attr(self, b):
        return [f"{b.sink}={{{b.prop_name}}}"]

    def bind_text(self, b):
        return f"{{{b.prop_name}}}"

    def child(self, node, depth):
        if node.optional is not None:
            inner = _ReactPrinter()
            inner.element(node, 0)
            self.emit(depth, f"{{{node.optional} != null && {inner.lines[0]}}}")
            return
        if node.tag in self.components:
            attrs = sorted(f"{b.prop_name}={{{_js(b.value)}}}" for b in node.binds)
            self.emit(depth, "<" + " ".join([node.tag] + attrs) + " />")
            return
        self.element(node, depth)

    def loop(self, loop, depth):
        comp = loop.items[0].tag
        self.emit(depth, f"{{{loop.ref}.map((it, i) => (")
        self.emit(depth + 1, f"<{comp} key={{i}} {{...it}} />")
        self.emit(depth, "))}")


def _render_react(files) -> list[tuple[str, str]]:
    out = []
    known = {posixpath.basename(p)[:-4] for p, _ in files if p.startswith("components/")}
    for path, root in files:
        if path.startswith("components/"):
            name = posixpath.basename(path)[:-4]
            props = _declared_props(root)
            lines = [f"export interface {name}Props {{"]
            for d in props:
                lines.append(f"  {d.name}?: string | null;" if d.optional else f"  {d.name}: string;")
            lines.append("}")
            lines.append("")
            args = ", ".join(d.name for d in props)
            lines.append(f"export default function {name}({{ {args} }}: {name}Props) {{")
            p = _ReactPrinter()
            p.element(root, 2)
            lines += ["  return (", *p.lines, "  );", "}"]
        else:
            lines = []
            loops = _loops(root)
            loop_comps = {lp.items[0].tag for lp in loops}
            for comp in _component_names(root, known):
                if comp in loop_comps:
                    lines.append(f'import {comp}, {{ {comp}Props }} from "./components/{comp}";')
                else:
                    lines.append(f'import {comp} from "./components/{comp}";')
            if lines:
                lines.append("")
            for lp in loops:
                comp = lp.items[0].tag
                lines.append(f"const {lp.ref}: {comp}Props[] = [")
                lines += [f"  {_record(it)}," for it in lp.items]
                lines.append("];")
                lines.append("")
            p = _ReactPrinter(frozenset(known))
            p.element(root, 2)
            lines += ["export default function App() {", "  return (", *p.lines, "  );", "}"]
        out.append((path, "\n".join(lines) + "\n"))
    return out


# --- Vue ----------------------------------------------------------------------


class _VuePrinter(_Printer):
    def __init__(self, definition: bool, components: frozenset = frozenset()) -> None:
        super().__init__()
        self.definition = definition
        self.components = components

    def bind_attr(self, b):
        if self.definition:
            return [f':{b.sink}="{b.prop_name}"']
        if b.value is None:
            return [f':{b.prop_name}="null"']
        return [f'{b.prop_name}="{escape_attr(b.value)}"']

    def bind_text(self, b):
        return f"{{{{ {b.prop_name} }}}}"

    def guard_attr(self, prop):
        return [f'v-if="{prop} != null"']

    def child(self, node, depth):
        if node.tag in self.components:
            attrs = sorted(self.bind_attr(b)[0] for b in node.binds)
            self.emit(depth, "<" + " ".join([node.tag] + attrs) + " />")
            return
        self.element(node, depth)

    def loop(self, loop, depth):
        comp = loop.items[0].tag
        self.emit(depth, f'<{comp} v-for="it in {loop.ref}" v-bind="it" />')


def _render_vue(files) -> list[tuple[str, str]]:
    out = []
    known = {posixpath.basename(p)[:-4] for p, _ in files if p.startswith("components/")}
    for path, root in files:
        if path.startswith("components/"):
            script = ['<script setup lang="ts">', "defineProps<{"]
            for d in _declared_props(root):
                script.append(f"  {d.name}?: string | null;" if d.optional else f"  {d.name}: string;")
            script += ["}>();", "</script>"]
            p = _VuePrinter(definition=True)
        else:
            script = []
            for comp in _component_names(root, known):
                script.append(f'import {comp} from "./components/{comp}.vue";')
            for lp in _loops(root):
                if script:
                    script.append("")
                script.append(f"const {lp.ref} = [")
                script += [f"  {_record(it)}," for it in lp.items]
                script.append("];")
            if script:
                script = ['<script setup lang="ts">', *script, "</script>"]
            p = _VuePrinter(False, frozenset(known))
        p.element(root, 1)
        lines = script + ([""] if script else []) + ["<template>", *p.lines, "</template>"]
        out.append((path, "\n".join(lines) + "\n"))
    return out


# --- Angular ----------------------------------------------------------------


def _angular_name(tag: str) -> str:
    kind, digest = tag[len("app-"):].split("-", 1)
    return f"{kind.capitalize()}_{digest}"


class _AngularPrinter(_Printer):
    def __init__(self, definition: bool) -> None:
        super().__init__()
        self.definition = definition

    def bind_attr(self, b):
        if self.definition:
            return [f'[{b.sink}]="{b.prop_name}"']
        if b.value is None:
            return [f'[{b.prop_name}]="null"']
        return [f'{b.prop_name}="{escape_attr(b.value)}"']

    def bind_text(self, b):
        return f"{{{{ {b.prop_name} }}}}"

    def guard_attr(self, prop):
        return [f'*ngIf="{prop} != null"']

    def child(self, node, depth):
        if not self.definition and node.tag.startswith("app-"):
            attrs = sorted(self.bind_attr(b)[0] for b in node.binds)
            self.emit(depth, "<" + " ".join([node.tag] + attrs) + f"></{node.tag}>")
            return
        self.element(node, depth)

    def loop(self, loop, depth):
        first = loop.items[0]
        forwards = sorted(f'[{b.prop_name}]="it.{b.prop_name}"' for b in first.binds)
        head = " ".join([first.tag, f'*ngFor="let it of {loop.ref}"'] + forwards)
        self.emit(depth, f"<{head}></{first.tag}>")


def _render_angular(files) -> list[tuple[str, str]]:
    out = []
    for path, root in files:
        definition = path.startswith("components/")
        p = _AngularPrinter(definition)
        p.element(root, 0)
        ts_path = path[: -len(".html")] + ".ts"
        html_name = posixpath.basename(path)
        if definition:
            stem = html_name[: -len(".component.html")]
            cls = angular_class(_angular_name("app-" + stem))
            props = _declared_props(root)
            common = ["NgIf"] if any(d.optional for d in props) else []
            ts = ['import { Component, Input } from "@angular/core";']
            if common:
                ts.append('import { NgIf } from "@angular/common";')
            ts += [
                "",
                "@Component({",
                f'  selector: "app-{stem}",',
                "  standalone: true,",
                f"  imports: [{', '.join(common)}],",
                f'  templateUrl: "./{html_name}",',
                "})",
                f"export class {cls} {{",
            ]
            for d in props:
                if d.optional:
                    ts.append(f"  @Input() {d.name}: string | null = null;")
                else:
                    ts.append(f"  @Input({{ required: true }}) {d.name}!: string;")
            ts.append("}")
        else:
            tags = sorted({n.tag for n in _iter_nodes(root) if n.tag.startswith("app-")})
            loops = _loops(root)
            imports = (["NgFor"] if loops else []) + [angular_class(_angular_name(t)) for t in tags]
            ts = ['import { Component } from "@angular/core";']
            if loops:
                ts.append('import { NgFor } from "@angular/common";')
            for t in tags:
                stem = t[len("app-"):]
                ts.append(f'import {{ {angular_class(_angular_name(t))} }} from "./components/{stem}.component";')
            ts += [
                "",
                "@Component({",
                '  selector: "app-root",',
                "  standalone: true,",
                f"  imports: [{', '.join(imports)}],",
                f'  templateUrl: "./{html_name}",',
                "})",
                "export class AppComponent {",
            ]
            for i, lp in enumerate(loops):
                if i:
                    ts.append("")
                ts.append(f"  {lp.ref} = [")
                ts += [f"    {_record(it)}," for it in lp.items]
                ts.append("  ];")
            ts.append("}")
        out.append((path, "\n".join(p.lines) + "\n"))
        out.append((ts_path, "\n".join(ts) + "\n"))
    return out


def _iter_nodes(root: Node):
    yield root
    for c in root.children:
        if isinstance(c, Node):
            yield from _iter_nodes(c)
        elif isinstance(c, Loop):
            for it in c.items:
                yield it


_RENDERERS = {
    Framework.HTML: _render_html,
    Framework.REACT: _render_react,
    Framework.VUE: _render_vue,
    Framework.ANGULAR: _render_angular,
}


def _sort_files(files: list[tuple[str, str]], mu: Framework) -> tuple[tuple[str, str], ...]:
    entry = entry_path(mu)
    entry_stem = entry.rsplit(".", 2)[0]

    def key(item):
        path = item[0]
        is_entry = path == entry or (mu is Framework.ANGULAR and path.startswith(entry_stem + "."))
        return (is_entry, path)

    return tuple(sorted(files, key=key))


def render(events: list[Event], mu: Framework, blueprint: Blueprint) -> CodeBundle:
    """Pretty-print a stream that the constraint engine accepts in full."""
    try:
        state = replay(blueprint, mu, events)
    except InadmissibleEvent as exc:
        raise IncompleteStream(f"stream rejected before completion: {exc}") from None
    if not is_complete(state):
        raise IncompleteStream("stream ends before every file, tag and binding is closed")
    files = _build_files(events)
    if entry_path(mu) not in {p for p, _ in files}:
        raise IncompleteStream("stream has no entry file")
    return CodeBundle(mu, _sort_files(_RENDERERS[mu](files), mu))
