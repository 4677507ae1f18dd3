"""Modularity and structure metrics computed from a blueprint and emitted text.

The scanners here read bundle text directly. They never consult the
constraint engine, so they cross-check it rather than restate it.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from html import unescape
from html.parser import HTMLParser
from typing import Optional

from .emitter.events import CodeBundle, Framework, component_tag, items_ref
from .model import (
    Blueprint,
    NodeKind,
    Payload,
    PayloadType,
    PropType,
    SkeletonNode,
    UiNode,
    UiTree,
    expand,
)
from .treedist import tree_edit_distance

__all__ = [
    "EvalReport", "UnknownTagMapping", "UnparsableBundle", "audit_tag_balance",
    "audit_type_sinks", "average_file_count", "component_reuse_rate", "evaluate",
    "loop_preservation_accuracy", "parse_html_bundle", "prop_coverage", "tree_edit_distance",
]


class UnparsableBundle(ValueError):
    pass


class UnknownTagMapping(UnparsableBundle):
    pass


# --- minimal DOM -------------------------------------------------------------


@dataclass
class Elem:
    tag: str
    attrs: dict[str, str]
    children: list["Elem"] = field(default_factory=list)
    text: list[str] = field(default_factory=list)

    def iter(self):
        yield self
        for c in self.children:
            yield from c.iter()


_VOID = {"img", "input", "meta", "br", "hr", "link"}
_RAW_TEXT = {"p", "span", "title"}


class _DomBuilder(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.root = Elem("#document", {})
        self.stack = [self.root]
        self.errors: list[str] = []

    def handle_starttag(self, tag, attrs):
        el = Elem(tag, {k: (v if v is not None else "") for k, v in attrs})
        self.stack[-1].children.append(el)
        if tag not in _VOID:
            self.stack.append(el)

    def handle_startendtag(self, tag, attrs):
        self.stack[-1].children.append(Elem(tag, {k: (v if v is not None else "") for k, v in attrs}))

    def handle_endtag(self, tag):
        if tag in _VOID:
            return
        if len(self.stack) < 2 or self.stack[-1].tag != tag:
            self.errors.append(f"unexpected </{tag}>")
            return
        self.stack.pop()

    def handle_data(self, data):
        top = self.stack[-1]
        if top.tag in _RAW_TEXT or data.strip():
            top.text.append(data)


def parse_dom(text: str) -> Elem:
    b = _DomBuilder()
    b.feed(text)
    b.close()
    if b.errors or len(b.stack) != 1:
        raise UnparsableBundle("; ".join(b.errors) or "unclosed elements")
    return b.root


def _html_root(bundle: CodeBundle) -> Elem:
    if bundle.framework is not Framework.HTML:
        raise UnparsableBundle(f"{bundle.framework.value} bundles are not HTML")
    files = dict(bundle.files)
    if "index.html" not in files:
        raise UnparsableBundle("bundle has no index.html")
    doc = parse_dom(files["index.html"])
    body = next((e for e in doc.iter() if e.tag == "body"), None)
    if body is None or len(body.children) != 1 or "".join(body.text).strip():
        raise UnparsableBundle("body must hold exactly one root element")
    return body.children[0]


_CLASS_KINDS = {"frame": NodeKind.FRAME, "stack": NodeKind.STACK, "row": NodeKind.ROW, "tile": NodeKind.TILE}


def _kind_of(el: Elem) -> NodeKind:
    if el.tag == "div":
        kind = _CLASS_KINDS.get(el.attrs.get("class", ""))
        if kind is None:
            raise UnknownTagMapping(f"div with class {el.attrs.get('class')!r}")
        return kind
    mapping = {"p": NodeKind.TEXT, "span": NodeKind.TEXT, "img": NodeKind.MEDIA,
               "input": NodeKind.CONTROL, "a": NodeKind.LINK}
    if el.tag not in mapping:
        raise UnknownTagMapping(f"no node kind for <{el.tag}>")
    return mapping[el.tag]


def _payload_of(el: Elem, kind: NodeKind) -> Payload:
    if kind is NodeKind.TEXT:
        return Payload(PayloadType.TEXT, "".join(el.text))
    if kind is NodeKind.MEDIA:
        if "src" not in el.attrs:
            raise UnparsableBundle("img without src")
        return Payload(PayloadType.IMAGE, el.attrs["src"])
    if kind is NodeKind.LINK:
        if "href" not in el.attrs:
            raise UnparsableBundle("a without href")
        return Payload(PayloadType.URL, el.attrs["href"])
    if kind is NodeKind.CONTROL and "placeholder" in el.attrs:
        return Payload(PayloadType.PLACEHOLDER, el.attrs["placeholder"])
    return Payload()


def parse_html_bundle(bundle: CodeBundle) -> UiTree:
    """Invert the HTML dialect: tags and classes back to kinds, payloads from text/attrs."""
    root = _html_root(bundle)
    nodes: dict[int, UiNode] = {}
    counter = [0]

    def visit(el: Elem) -> int:
        kind = _kind_of(el)
        if kind is not NodeKind.TEXT and "".join(el.text).strip():
            raise UnparsableBundle(f"stray text inside <{el.tag}>")
        nid = counter[0]
        counter[0] += 1
        kids = tuple(visit(c) for c in el.children)
        nodes[nid] = UiNode(nid, kind, _payload_of(el, kind), kids)
        return nid

    visit(root)
    tree = UiTree(nodes, 0)
    try:
        tree.validate()
    except ValueError as exc:
        raise UnparsableBundle(str(exc)) from None
    return tree


# --- reuse ------------------------------------------------------------------------


def component_reuse_rate(bp: Blueprint) -> float:
    """Fraction of nodes saved by instantiating templates beyond their first use."""
    if not bp.tree.nodes:
        return 0.0
    saved = sum((t.support - 1) * t.skeleton.size() for t in bp.templates)
    return min(1.0, max(0.0, saved / len(bp.tree)))


def average_file_count(bundles: list[CodeBundle]) -> float:
    return sum(len(b.files) for b in bundles) / len(bundles)


# --- text scanners ------------------------------------------------------------------

_JS_VALUE = r'null|"(?:[^"\\]|\\.)*"'
_RECORD_FIELD = re.compile(r"(\w+): (" + _JS_VALUE + r")")


def _js_value(raw: str) -> Optional[str]:
    return None if raw == "null" else json.loads(raw)


def _records(block: str) -> list[list[tuple[str, Optional[str]]]]:
    out = []
    for line in block.splitlines():
        line = line.strip()
        if line.startswith("{"):
            out.append([(k, _js_value(v)) for k, v in _RECORD_FIELD.findall(line)])
    return out


def _item_consts(text: str, mu: Framework) -> dict[str, list]:
    if mu is Framework.ANGULAR:
        pattern = r"(items\d+) = \[\n(.*?)\n  \];"
    else:
        pattern = r"const (items\d+)(?::\s*\w+\[\])? = \[\n(.*?)\n\];"
    return {ref: _records(block) for ref, block in re.findall(pattern, text, re.S)}


def _entry_markup(bundle: CodeBundle) -> str:
    text = bundle.entry
    if bundle.framework is Framework.REACT:
        return text[text.find("export default function App"):]
    if bundle.framework is Framework.VUE:
        return text[text.find("<template>"):]
    return text


def _entry_data(bundle: CodeBundle) -> str:
    if bundle.framework is Framework.ANGULAR:
        return bundle.get("app.component.ts")
    return bundle.entry


def _component_sites(bundle: CodeBundle) -> list[tuple[str, str, object]]:
    """Component references in document order: (component tag, 'loop'|'inline', data)."""
    mu = bundle.framework
    markup = _entry_markup(bundle)
    if mu is Framework.REACT:
        loop_re = r"\{(?P<ref>items\d+)\.map\(\(it, i\) => \(\s*<(?P<tag>\w+) key=\{i\} \{\.\.\.it\} />"
        inline_re = r"<(?P<itag>[A-Z][a-z]*_[0-9a-f]{8})(?P<attrs>(?:\s+\w+=\{(?:" + _JS_VALUE + r")\})*)\s*/>"
    elif mu is Framework.VUE:
        loop_re = r'<(?P<tag>\w+) v-for="it in (?P<ref>items\d+)" v-bind="it" />'
        inline_re = r'<(?P<itag>[A-Z][a-z]*_[0-9a-f]{8})(?P<attrs>(?:\s+:?\w+="[^"]*")*)\s*/>'
    else:
        loop_re = (r'<(?P<tag>app-[\w-]+) \*ngFor="let it of (?P<ref>items\d+)"'
                   r'(?P<fwd>(?:\s+\[\w+\]="it\.\w+")*)></(?P=tag)>')
        inline_re = r'<(?P<itag>app-[\w-]+)(?P<attrs>(?:\s+\[?\w+\]?="[^"]*")*)></(?P=itag)>'
    sites = []
    for m in re.finditer(f"(?:{loop_re})|(?:{inline_re})", markup):
        if m.group("ref"):
            fwd = m.group("fwd") if mu is Framework.ANGULAR else None
            sites.append((m.group("tag"), "loop", (m.group("ref"), fwd)))
        else:
            sites.append((m.group("itag"), "inline", m.group("attrs")))
    return sites


def _inline_record(attrs: str, mu: Framework) -> list[tuple[str, Optional[str]]]:
    if mu is Framework.REACT:
        return [(k, _js_value(v)) for k, v in re.findall(r"(\w+)=\{(" + _JS_VALUE + r")\}", attrs)]
    out = []
    for bound, key, value in re.findall(r'(:|\[)?(\w+)\]?="([^"]*)"', attrs):
        out.append((key, None if bound and value == "null" else unescape(value)))
    return out


def _records_by_component(bundle: CodeBundle) -> dict[str, list[list]]:
    mu = bundle.framework
    consts = _item_consts(_entry_data(bundle), mu)
    out: dict[str, list[list]] = {}
    for tag, how, data in _component_sites(bundle):
        if how == "inline":
            out.setdefault(tag, []).append(_inline_record(data, mu))
            continue
        ref, fwd = data
        recs = consts.get(ref, [])
        if fwd is not None:
            forwarded = re.findall(r'\[(\w+)\]="it\.(\w+)"', fwd)
            ok = {k for k, v in forwarded if k == v and sum(1 for f in forwarded if f[0] == k) == 1}
            recs = [[(k, v) for k, v in r if k in ok] for r in recs]
        out.setdefault(tag, []).extend(recs)
    return out


def _html_instances(bundle: CodeBundle) -> dict[str, list[Elem]]:
    root = _html_root(bundle)
    out: dict[str, list[Elem]] = {}
    for el in root.iter():
        if "data-template" in el.attrs:
            out.setdefault(el.attrs["data-template"], []).append(el)
    return out


_SKELETON_TAGS = {NodeKind.TEXT: ("p", "span"), NodeKind.MEDIA: ("img",), NodeKind.CONTROL: ("input",),
                  NodeKind.LINK: ("a",)}


def _fits(skel: SkeletonNode, el: Elem) -> bool:
    if skel.kind.is_container:
        return el.tag == "div" and el.attrs.get("class") == skel.kind.value
    return el.tag in _SKELETON_TAGS[skel.kind]


def _html_values(skel: SkeletonNode, el: Elem) -> Optional[dict[str, Optional[str]]]:
    """Prop values found at their skeleton positions inside one replicated instance."""
    if not _fits(skel, el):
        return None
    found: dict[str, Optional[str]] = {}
    if skel.prop is not None:
        if skel.kind is NodeKind.TEXT:
            found[skel.prop] = "".join(el.text)
        else:
            sink = {NodeKind.MEDIA: "src", NodeKind.LINK: "href", NodeKind.CONTROL: "placeholder"}[skel.kind]
            found[skel.prop] = el.attrs.get(sink)

    def align(si: int, ci: int) -> Optional[dict]:
        kids = skel.children
        if si == len(kids):
            return {} if ci == len(el.children) else None
        if ci < len(el.children):
            sub = _html_values(kids[si], el.children[ci])
            if sub is not None:
                rest = align(si + 1, ci + 1)
                if rest is not None:
                    return {**sub, **rest}
        if kids[si].optional:
            rest = align(si + 1, ci)
            if rest is not None:
                return {kids[si].prop: None, **rest}
        return None

    rest = align(0, 0)
    return None if rest is None else {**found, **rest}


def prop_coverage(bp: Blueprint, bundle: CodeBundle) -> float:
    """Share of (instance, prop) pairs whose value appears exactly once where it belongs."""
    total = hit = 0
    order = bp.instance_order()
    mu = bundle.framework
    if mu is Framework.HTML:
        try:
            sites = _html_instances(bundle)
        except UnparsableBundle:
            sites = {}
    else:
        records = _records_by_component(bundle)
    for tmpl in bp.templates:
        members = [n for n in order if bp.instances[n].template_id == tmpl.template_id]
        for k, nid in enumerate(members):
            binding = bp.instances[nid].binding
            expected = {p: (v.value if v is not None else None) for p, v in binding.items()}
            total += len(expected)
            if mu is Framework.HTML:
                els = sites.get(tmpl.name, [])
                found = _html_values(tmpl.skeleton, els[k]) if k < len(els) else None
                if found is None:
                    continue
                hit += sum(1 for p, v in expected.items() if p in found and found[p] == v)
            else:
                recs = records.get(component_tag(tmpl, mu), [])
                if k >= len(recs):
                    continue
                rec = recs[k]
                for p, v in expected.items():
                    matches = [val for key, val in rec if key == p]
                    if len(matches) == 1 and matches[0] == v:
                        hit += 1
    return 1.0 if total == 0 else hit / total


def loop_preservation_accuracy(bp: Blueprint, bundle: CodeBundle) -> float:
    """Share of loop groups realized as exactly one loop construct (HTML: exact replication)."""
    if not bp.loop_groups:
        return 1.0
    mu = bundle.framework
    preserved = 0
    if mu is Framework.HTML:
        try:
            root = _html_root(bundle)
        except UnparsableBundle:
            return 0.0
        dom = list(root.iter())
        pos = {nid: i for i, nid in enumerate(bp.tree.preorder())}
        for g in bp.loop_groups:
            name = bp.template(g.template_id).name
            if pos[g.parent] >= len(dom):
                continue
            kids = dom[pos[g.parent]].children
            start = bp.tree[g.parent].children.index(g.instances[0])
            run = 0
            for el in kids[start:]:
                if el.attrs.get("data-template") != name:
                    break
                run += 1
            preserved += run == len(g.instances)
        return preserved / len(bp.loop_groups)
    markup = _entry_markup(bundle)
    consts = _item_consts(_entry_data(bundle), mu)
    for i, g in enumerate(bp.loop_groups):
        ref = items_ref(i)
        construct = {
            Framework.REACT: f"{ref}.map(",
            Framework.VUE: f'v-for="it in {ref}"',
            Framework.ANGULAR: f'*ngFor="let it of {ref}"',
        }[mu]
        if markup.count(construct) == 1 and len(consts.get(ref, [])) == len(g.instances):
            preserved += 1
    return preserved / len(bp.loop_groups)


# --- audits ---------------------------------------------------------------------------

_TAG_TOKEN = re.compile(r"""<(/?)([A-Za-z][\w\-]*)((?:"[^"]*"|'[^']*'|\{[^{}]*\}|[^'"{}>])*?)(/?)>""")


def audit_tag_balance(bundle: CodeBundle) -> list[str]:
    """Pushdown check of markup in every file; returns problems found."""
    problems = []
    for path, text in bundle.files:
        if path.endswith(".ts"):
            continue
        stack: list[str] = []
        for m in _TAG_TOKEN.finditer(text):
            closing, name, _, selfclose = m.groups()
            if selfclose or (not closing and name in _VOID):
                continue
            if not closing:
                stack.append(name)
            elif not stack or stack[-1] != name:
                problems.append(f"{path}: </{name}> does not close <{stack[-1] if stack else None}>")
                break
            else:
                stack.pop()
        if stack:
            problems.append(f"{path}: unclosed {stack}")
    return problems


def audit_type_sinks(bp: Blueprint, bundle: CodeBundle) -> list[str]:
    """Regex-level check that URL values and URL props only land in src/href."""
    problems = []
    mu = bundle.framework
    files = dict(bundle.files)
    if mu is Framework.HTML:
        urls = {
            v.value for inst in bp.instances.values() for p, v in inst.binding.items()
            if v is not None and bp.template(inst.template_id).prop(p).prop_type is PropType.URL
        }
        try:
            root = _html_root(bundle)
        except UnparsableBundle as exc:
            return [str(exc)]
        for el in root.iter():
            for name, value in el.attrs.items():
                if value in urls and name not in ("src", "href"):
                    problems.append(f"URL {value!r} placed in {name}")
            if "".join(el.text) in urls:
                problems.append(f"URL {''.join(el.text)!r} placed in text content")
        return problems
    for tmpl in bp.templates:
        url_props = [p.name for p in tmpl.props if p.prop_type is PropType.URL]
        if not url_props:
            continue
        path = {
            Framework.REACT: f"components/{tmpl.name}.tsx",
            Framework.VUE: f"components/{tmpl.name}.vue",
            Framework.ANGULAR: f"components/{tmpl.name.lower().replace('_', '-')}.component.html",
        }[mu]
        text = files.get(path)
        if text is None:
            problems.append(f"missing definition {path}")
            continue
        for p in url_props:
            if mu is Framework.REACT:
                sinks = re.findall(r"([\w-]+)=\{" + p + r"\}", text)
                interpolated = len(re.findall(r"(?<!=)\{" + p + r"\}", text))
            elif mu is Framework.VUE:
                sinks = re.findall(r':([\w-]+)="' + p + '"', text)
                interpolated = len(re.findall(r"\{\{\s*" + p + r"\s*\}\}", text))
            else:
                sinks = re.findall(r'\[([\w-]+)\]="' + p + '"', text)
                interpolated = len(re.findall(r"\{\{\s*" + p + r"\s*\}\}", text))
            for s in sinks:
                if s not in ("src", "href"):
                    problems.append(f"{path}: URL prop {p} bound to {s}")
            if interpolated:
                problems.append(f"{path}: URL prop {p} rendered as text")
            if not sinks:
                problems.append(f"{path}: URL prop {p} never placed")
    return problems


# --- report ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    ted: int
    crr: float
    lpa: float
    pc: float
    afc: int
    roundtrip_ted: int

    def to_json(self) -> dict:
        return asdict(self)


def evaluate(bp: Blueprint, bundle: CodeBundle, *, strict: bool = False,
             reference: Optional[UiTree] = None) -> EvalReport:
    """Metrics for one document.

    ``ted`` compares the expanded blueprint with ``reference`` (default: the
    blueprint's own tree). ``roundtrip_ted`` parses an HTML bundle (the given
    one, or a fresh HTML emission) back to a tree and compares it with the
    expanded blueprint.
    """
    from .emitter import emit

    expanded = expand(bp)
    ted = tree_edit_distance(reference if reference is not None else bp.tree, expanded, strict=strict)
    html_bundle = bundle if bundle.framework is Framework.HTML else emit(bp, Framework.HTML).bundle
    roundtrip = tree_edit_distance(parse_html_bundle(html_bundle), expanded, strict=strict)
    return EvalReport(
        ted=ted,
        crr=component_reuse_rate(bp),
        lpa=loop_preservation_accuracy(bp, bundle),
        pc=prop_coverage(bp, bundle),
        afc=len(bundle.files),
        roundtrip_ted=roundtrip,
    )
