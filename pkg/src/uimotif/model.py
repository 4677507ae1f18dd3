"""Hierarchical UI tree, template bank and blueprint container.

The blueprint JSON layout (version 1)::

    {"version": 1, "root": 0,
     "nodes": [{"id": 0, "kind": "frame", "bbox": [x0, y0, x1, y1],
                "payload": {"type": "text", "value": "Hi"}, "children": [1, 2]}],
     "templates": [...], "instances": {"<node id>": {...}}, "loop_groups": [...]}
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Optional


class BlueprintError(ValueError):
    """Base class for every validation failure on a blueprint document."""


class MalformedJson(BlueprintError):
    pass


class UnknownKind(BlueprintError):
    pass


class InvalidBox(BlueprintError):
    pass


class PayloadMismatch(BlueprintError):
    pass


class OverlappingInstances(BlueprintError):
    pass


class DanglingReference(BlueprintError):
    pass


class InvalidTree(BlueprintError):
    """Duplicate ids, cycles, nodes with two parents or unreachable nodes."""


class InstanceMismatch(BlueprintError):
    """An instance subtree does not expand from its template and binding."""


class NodeKind(str, enum.Enum):
    FRAME = "frame"
    STACK = "stack"
    ROW = "row"
    TILE = "tile"
    TEXT = "text"
    MEDIA = "media"
    CONTROL = "control"
    LINK = "link"

    @property
    def is_container(self) -> bool:
        return self in CONTAINER_KINDS

    @classmethod
    def parse(cls, raw: object) -> "NodeKind":
        try:
            return cls(raw)
        except ValueError:
            raise UnknownKind(f"unknown node kind {raw!r}") from None


CONTAINER_KINDS = frozenset({NodeKind.FRAME, NodeKind.STACK, NodeKind.ROW, NodeKind.TILE})
LEAF_ONLY_KINDS = frozenset({NodeKind.TEXT, NodeKind.MEDIA, NodeKind.CONTROL})


class PayloadType(str, enum.Enum):
    NONE = "none"
    TEXT = "text"
    URL = "url"
    IMAGE = "image"
    PLACEHOLDER = "placeholder"


# payload types each kind may carry
ALLOWED_PAYLOADS: dict[NodeKind, frozenset[PayloadType]] = {
    NodeKind.FRAME: frozenset({PayloadType.NONE}),
    NodeKind.STACK: frozenset({PayloadType.NONE}),
    NodeKind.ROW: frozenset({PayloadType.NONE}),
    NodeKind.TILE: frozenset({PayloadType.NONE}),
    NodeKind.TEXT: frozenset({PayloadType.TEXT}),
    NodeKind.MEDIA: frozenset({PayloadType.IMAGE}),
    NodeKind.LINK: frozenset({PayloadType.URL}),
    NodeKind.CONTROL: frozenset({PayloadType.PLACEHOLDER, PayloadType.NONE}),
}


@dataclass(frozen=True)
class BBox:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.x0 < self.x1 <= 1.0 and 0.0 <= self.y0 < self.y1 <= 1.0):
            raise InvalidBox(f"invalid box {self.as_list()}")

    def as_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def parse(cls, raw: object) -> "BBox":
        if not isinstance(raw, (list, tuple)) or len(raw) != 4:
            raise InvalidBox(f"bbox must be a list of 4 numbers, got {raw!r}")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in raw):
            raise InvalidBox(f"bbox must be numeric, got {raw!r}")
        return cls(*(float(v) for v in raw))

    def union(self, other: "BBox") -> "BBox":
        return BBox(
            min(self.x0, other.x0), min(self.y0, other.y0),
            max(self.x1, other.x1), max(self.y1, other.y1),
        )


@dataclass(frozen=True)
class Payload:
    type: PayloadType = PayloadType.NONE
    value: Optional[str] = None

    def __post_init__(self) -> None:
        if (self.type is PayloadType.NONE) != (self.value is None):
            raise PayloadMismatch(f"payload {self.type.value} with value {self.value!r}")

    def to_json(self) -> Optional[dict]:
        if self.type is PayloadType.NONE:
            return None
        return {"type": self.type.value, "value": self.value}

    @classmethod
    def from_json(cls, raw: object) -> "Payload":
        if raw is None:
            return NO_PAYLOAD
        if not isinstance(raw, dict) or set(raw) != {"type", "value"}:
            raise PayloadMismatch(f"payload must be {{type, value}}, got {raw!r}")
        try:
            ptype = PayloadType(raw["type"])
        except ValueError:
            raise PayloadMismatch(f"unknown payload type {raw['type']!r}") from None
        if ptype is PayloadType.NONE or not isinstance(raw["value"], str):
            raise PayloadMismatch(f"bad payload {raw!r}")
        return cls(ptype, raw["value"])


NO_PAYLOAD = Payload()


def text(value: str) -> Payload:
    return Payload(PayloadType.TEXT, value)


def url(value: str) -> Payload:
    return Payload(PayloadType.URL, value)


def image(value: str) -> Payload:
    return Payload(PayloadType.IMAGE, value)


def placeholder(value: str) -> Payload:
    return Payload(PayloadType.PLACEHOLDER, value)


def check_payload(kind: NodeKind, payload: Payload) -> None:
    if payload.type not in ALLOWED_PAYLOADS[kind]:
        raise PayloadMismatch(f"{kind.value} node cannot carry a {payload.type.value} payload")


@dataclass(frozen=True)
class UiNode:
    id: int
    kind: NodeKind
    payload: Payload = NO_PAYLOAD
    children: tuple[int, ...] = ()
    bbox: Optional[BBox] = None


@dataclass(frozen=True)
class UiTree:
    """Rooted ordered tree; ``nodes`` maps id to node."""

    nodes: Mapping[int, UiNode]
    root: int

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, node_id: int) -> UiNode:
        return self.nodes[node_id]

    def preorder(self, start: Optional[int] = None) -> Iterator[int]:
        stack = [self.root if start is None else start]
        while stack:
            nid = stack.pop()
            yield nid
            stack.extend(reversed(self.nodes[nid].children))

    def subtree_ids(self, node_id: int) -> list[int]:
        return list(self.preorder(node_id))

    def parents(self) -> dict[int, int]:
        return {c: n.id for n in self.nodes.values() for c in n.children}

    def validate(self) -> None:
        if self.root not in self.nodes:
            raise DanglingReference(f"root {self.root} is not a node")
        seen_parent: dict[int, int] = {}
        for node in self.nodes.values():
            check_payload(node.kind, node.payload)
            if node.children and node.kind in LEAF_ONLY_KINDS:
                raise InvalidTree(f"{node.kind.value} node {node.id} cannot have children")
            for c in node.children:
                if node.kind is NodeKind.LINK and c in self.nodes and self.nodes[c].kind is not NodeKind.TEXT:
                    raise InvalidTree(f"link node {node.id} may only contain text nodes")
                if c not in self.nodes:
                    raise DanglingReference(f"node {node.id} lists unknown child {c}")
                if c in seen_parent:
                    raise InvalidTree(f"node {c} has two parents")
                seen_parent[c] = node.id
        if self.root in seen_parent:
            raise InvalidTree("root has a parent")
        reached = 0
        for _ in self.preorder():
            reached += 1
            if reached > len(self.nodes):
                raise InvalidTree("cycle in tree")
        if reached != len(self.nodes):
            raise InvalidTree(f"{len(self.nodes) - reached} nodes unreachable from root")


def build_tree(spec, start_id: int = 0) -> UiTree:
    """Build a tree from nested ``(kind, payload, [children])`` tuples, ids in preorder.

    ``payload`` may be omitted for containers: ``("row", [child, child])``.
    """
    nodes: dict[int, UiNode] = {}
    counter = [start_id]

    def visit(item) -> int:
        if len(item) == 2 and isinstance(item[1], list):
            kind, payload, kids = item[0], NO_PAYLOAD, item[1]
        elif len(item) == 2:
            kind, payload, kids = item[0], item[1], []
        elif len(item) == 1:
            kind, payload, kids = item[0], NO_PAYLOAD, []
        else:
            kind, payload, kids = item
        nid = counter[0]
        counter[0] += 1
        child_ids = tuple(visit(k) for k in kids)
        nodes[nid] = UiNode(nid, NodeKind(kind), payload or NO_PAYLOAD, child_ids)
        return nid

    root = visit(spec)
    tree = UiTree(nodes, root)
    tree.validate()
    return tree


def renumber(tree: UiTree) -> UiTree:
    """Copy of ``tree`` with ids reassigned in preorder from 0."""
    order = list(tree.preorder())
    new_id = {old: i for i, old in enumerate(order)}
    nodes = {
        new_id[old]: UiNode(
            new_id[old], tree[old].kind, tree[old].payload,
            tuple(new_id[c] for c in tree[old].children), tree[old].bbox,
        )
        for old in order
    }
    return UiTree(nodes, 0)


def trees_equal(a: UiTree, b: UiTree, *, strict: bool = True) -> bool:
    """Ordered structural equality ignoring ids (and bboxes)."""
    stack = [(a.root, b.root)]
    while stack:
        x, y = stack.pop()
        na, nb = a[x], b[y]
        if na.kind != nb.kind or len(na.children) != len(nb.children):
            return False
        if (na.payload if strict else na.payload.type) != (nb.payload if strict else nb.payload.type):
            return False
        stack.extend(zip(na.children, nb.children))
    return True


# --- templates ------------------------------------------------------------


class PropType(str, enum.Enum):
    TEXT = "text"
    URL = "url"
    IMAGE = "image"
    PLACEHOLDER = "placeholder"
    ITEMS = "items"


SINKS: dict[PropType, frozenset[str]] = {
    PropType.TEXT: frozenset({"text-content"}),
    PropType.URL: frozenset({"src", "href"}),
    PropType.IMAGE: frozenset({"src"}),
    PropType.PLACEHOLDER: frozenset({"placeholder"}),
    PropType.ITEMS: frozenset({"loop-body"}),
}

PROP_TYPE_OF_PAYLOAD = {
    PayloadType.TEXT: PropType.TEXT,
    PayloadType.URL: PropType.URL,
    PayloadType.IMAGE: PropType.IMAGE,
    PayloadType.PLACEHOLDER: PropType.PLACEHOLDER,
}
PAYLOAD_OF_PROP_TYPE = {v: k for k, v in PROP_TYPE_OF_PAYLOAD.items()}


@dataclass(frozen=True)
class PropSpec:
    name: str
    prop_type: PropType
    sinks: frozenset[str]
    optional: bool = False
    item_template: Optional[str] = None  # only for ITEMS props

    def __post_init__(self) -> None:
        allowed = SINKS[self.prop_type]
        if not self.sinks or not self.sinks <= allowed:
            raise PayloadMismatch(f"prop {self.name}: sinks {sorted(self.sinks)} not allowed for {self.prop_type.value}")
        if self.prop_type is not PropType.URL and self.sinks != allowed:
            raise PayloadMismatch(f"prop {self.name}: {self.prop_type.value} requires sinks {sorted(allowed)}")
        if (self.prop_type is PropType.ITEMS) != (self.item_template is not None):
            raise PayloadMismatch(f"prop {self.name}: item template only allowed on items props")

    @classmethod
    def for_type(cls, name: str, prop_type: PropType, optional: bool = False) -> "PropSpec":
        return cls(name, prop_type, SINKS[prop_type], optional)

    def to_json(self) -> dict:
        out = {"name": self.name, "type": self.prop_type.value, "sinks": sorted(self.sinks)}
        if self.optional:
            out["optional"] = True
        if self.item_template is not None:
            out["template"] = self.item_template
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "PropSpec":
        try:
            ptype = PropType(raw["type"])
            return cls(
                raw["name"], ptype, frozenset(raw["sinks"]),
                bool(raw.get("optional", False)), raw.get("template"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, BlueprintError):
                raise
            raise PayloadMismatch(f"bad prop spec {raw!r}") from None


@dataclass(frozen=True)
class SkeletonNode:
    """Template skeleton node.

    A payload-bearing node either keeps a constant ``payload`` or names a
    ``prop`` slot. ``optional`` nodes are leaves that some instances omit;
    they always carry a prop.
    """

    kind: NodeKind
    payload: Payload = NO_PAYLOAD
    prop: Optional[str] = None
    optional: bool = False
    children: tuple["SkeletonNode", ...] = ()

    def iter(self) -> Iterator["SkeletonNode"]:
        yield self
        for c in self.children:
            yield from c.iter()

    def size(self) -> int:
        return sum(1 for _ in self.iter())

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind.value, "children": [c.to_json() for c in self.children]}
        if self.prop is not None:
            out["prop"] = self.prop
        elif self.payload.type is not PayloadType.NONE:
            out["payload"] = self.payload.to_json()
        if self.optional:
            out["optional"] = True
        return out

    @classmethod
    def from_json(cls, raw: dict) -> "SkeletonNode":
        if not isinstance(raw, dict):
            raise MalformedJson(f"skeleton node must be an object, got {raw!r}")
        kind = NodeKind.parse(raw.get("kind"))
        payload = Payload.from_json(raw.get("payload"))
        return cls(
            kind, payload, raw.get("prop"), bool(raw.get("optional", False)),
            tuple(cls.from_json(c) for c in raw.get("children", [])),
        )


@dataclass(frozen=True)
class Template:
    template_id: str
    skeleton: SkeletonNode
    props: tuple[PropSpec, ...]
    support: int

    @property
    def name(self) -> str:
        """Component name: ``<Kind>_<first 8 hex of the canonical hash>``."""
        return f"{self.skeleton.kind.value.capitalize()}_{self.template_id[:8]}"

    def prop(self, name: str) -> PropSpec:
        for p in self.props:
            if p.name == name:
                return p
        raise KeyError(name)

    def validate(self) -> None:
        names = [p.name for p in self.props]
        if len(set(names)) != len(names):
            raise PayloadMismatch(f"template {self.template_id}: duplicate prop names")
        if self.support < 2:
            raise PayloadMismatch(f"template {self.template_id}: support {self.support} < 2")
        referenced: dict[str, int] = {}
        for node in self.skeleton.iter():
            if node.prop is not None:
                if node.prop not in names:
                    raise DanglingReference(f"template {self.template_id}: slot {node.prop} has no prop spec")
                spec = self.prop(node.prop)
                if spec.prop_type is not PropType.ITEMS:
                    if PAYLOAD_OF_PROP_TYPE[spec.prop_type] not in ALLOWED_PAYLOADS[node.kind]:
                        raise PayloadMismatch(f"slot {node.prop} of type {spec.prop_type.value} on {node.kind.value}")
                if spec.optional != node.optional:
                    raise PayloadMismatch(f"slot {node.prop}: optional flag disagrees with prop spec")
                referenced[node.prop] = referenced.get(node.prop, 0) + 1
            else:
                if node.optional:
                    raise PayloadMismatch(f"template {self.template_id}: optional node without a prop")
                check_payload(node.kind, node.payload)
            if node.optional and node.children:
                raise PayloadMismatch(f"template {self.template_id}: optional nodes must be leaves")
        missing = set(names) - set(referenced)
        if missing:
            raise DanglingReference(f"template {self.template_id}: props {sorted(missing)} are never used")

    def to_json(self) -> dict:
        return {
            "id": self.template_id,
            "name": self.name,
            "props": [p.to_json() for p in self.props],
            "skeleton": self.skeleton.to_json(),
            "support": self.support,
        }

    @classmethod
    def from_json(cls, raw: dict) -> "Template":
        try:
            return cls(
                str(raw["id"]), SkeletonNode.from_json(raw["skeleton"]),
                tuple(PropSpec.from_json(p) for p in raw["props"]), int(raw["support"]),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedJson(f"bad template entry: {exc}") from None


Binding = Mapping[str, Optional[Payload]]


@dataclass(frozen=True)
class Instance:
    template_id: str
    binding: Binding


@dataclass(frozen=True)
class LoopGroup:
    parent: int
    template_id: str
    instances: tuple[int, ...]


def expand_skeleton(skeleton: SkeletonNode, binding: Binding) -> Optional[tuple]:
    """Substitute ``binding`` into ``skeleton``; nested ``(kind, payload, children)``."""
    if skeleton.prop is not None:
        payload = binding[skeleton.prop]
        if payload is None:
            return None
    else:
        payload = skeleton.payload
    kids = [expand_skeleton(c, binding) for c in skeleton.children]
    return (skeleton.kind, payload, [k for k in kids if k is not None])


@dataclass(frozen=True)
class Blueprint:
    tree: UiTree
    templates: tuple[Template, ...] = ()
    instances: Mapping[int, Instance] = field(default_factory=dict)
    loop_groups: tuple[LoopGroup, ...] = ()

    def template(self, template_id: str) -> Template:
        for t in self.templates:
            if t.template_id == template_id:
                return t
        raise DanglingReference(f"unknown template {template_id}")

    def instance_order(self) -> list[int]:
        """Instance root ids in document preorder."""
        return [n for n in self.tree.preorder() if n in self.instances]

    def validate(self) -> None:
        self.tree.validate()
        ids = [t.template_id for t in self.templates]
        if len(set(ids)) != len(ids):
            raise InvalidTree("duplicate template ids")
        for t in self.templates:
            t.validate()
        claimed: dict[int, int] = {}
        for root, inst in self.instances.items():
            if root not in self.tree.nodes:
                raise DanglingReference(f"instance root {root} is not a node")
            tmpl = self.template(inst.template_id)
            names = {p.name for p in tmpl.props}
            if set(inst.binding) != names:
                raise PayloadMismatch(
                    f"instance {root}: binding keys {sorted(inst.binding)} != props {sorted(names)}"
                )
            for pname, value in inst.binding.items():
                spec = tmpl.prop(pname)
                if value is None:
                    if not spec.optional:
                        raise PayloadMismatch(f"instance {root}: required prop {pname} is null")
                elif spec.prop_type is PropType.ITEMS or value.type is not PAYLOAD_OF_PROP_TYPE[spec.prop_type]:
                    raise PayloadMismatch(f"instance {root}: prop {pname} bound to {value.type.value}")
            for nid in self.tree.subtree_ids(root):
                if nid in claimed:
                    raise OverlappingInstances(
                        f"node {nid} belongs to instances {claimed[nid]} and {root}"
                    )
                claimed[nid] = root
            expected = build_tree(expand_skeleton(tmpl.skeleton, inst.binding))
            actual = subtree(self.tree, root)
            if not trees_equal(expected, actual):
                raise InstanceMismatch(f"instance {root} does not expand from template {tmpl.template_id}")
        for g in self.loop_groups:
            if g.parent not in self.tree.nodes:
                raise DanglingReference(f"loop group parent {g.parent} is not a node")
            if len(g.instances) < 2:
                raise InvalidTree(f"loop group under {g.parent} has fewer than 2 instances")
            kids = self.tree[g.parent].children
            for nid in g.instances:
                if nid not in self.instances or self.instances[nid].template_id != g.template_id:
                    raise DanglingReference(f"loop member {nid} is not an instance of {g.template_id}")
                if nid not in kids:
                    raise InvalidTree(f"loop member {nid} is not a child of {g.parent}")
            first = kids.index(g.instances[0])
            if tuple(kids[first:first + len(g.instances)]) != g.instances:
                raise InvalidTree(f"loop group under {g.parent} is not a consecutive sibling run")

    def loop_of(self) -> dict[int, int]:
        """Map instance root -> index of its loop group."""
        return {nid: i for i, g in enumerate(self.loop_groups) for nid in g.instances}


def subtree(tree: UiTree, root: int) -> UiTree:
    return UiTree({n: tree[n] for n in tree.preorder(root)}, root)


def expand(bp: Blueprint) -> UiTree:
    """Rebuild the page tree by substituting every binding into its template."""

    def visit(nid: int):
        if nid in bp.instances:
            inst = bp.instances[nid]
            return expand_skeleton(bp.template(inst.template_id).skeleton, inst.binding)
        node = bp.tree[nid]
        return (node.kind, node.payload, [visit(c) for c in node.children])

    return build_tree(visit(bp.tree.root))


# --- JSON ------------------------------------------------------------------


def _dump(value, indent: int = 0) -> str:
    pad = "  " * (indent + 1)
    if isinstance(value, _Fixed):
        return f"{value.v:.6f}"
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {_dump(value[k], indent + 1)}" for k in sorted(value)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(v, (int, _Fixed)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(_dump(v) for v in value) + "]"
        return "[\n" + ",\n".join(pad + _dump(v, indent + 1) for v in value) + "\n" + "  " * indent + "]"
    if isinstance(value, float):
        raise TypeError("floats must be wrapped for fixed formatting")
    return json.dumps(value, ensure_ascii=False)


@dataclass(frozen=True)
class _Fixed:
    v: float


def _binding_json(binding: Binding) -> dict:
    return {k: (v.to_json() if v is not None else None) for k, v in binding.items()}


def blueprint_to_json(bp: Blueprint) -> dict:
    nodes = []
    for nid in sorted(bp.tree.nodes):
        n = bp.tree[nid]
        entry: dict = {"id": n.id, "kind": n.kind.value, "children": list(n.children)}
        if n.bbox is not None:
            entry["bbox"] = [_Fixed(v) for v in n.bbox.as_list()]
        if n.payload.type is not PayloadType.NONE:
            entry["payload"] = n.payload.to_json()
        nodes.append(entry)
    return {
        "version": 1,
        "root": bp.tree.root,
        "nodes": nodes,
        "templates": [t.to_json() for t in sorted(bp.templates, key=lambda t: t.template_id)],
        "instances": {
            str(k): {"template": v.template_id, "binding": _binding_json(v.binding)}
            for k, v in bp.instances.items()
        },
        "loop_groups": [
            {"parent": g.parent, "template": g.template_id, "instances": list(g.instances)}
            for g in bp.loop_groups
        ],
    }


def serialize_blueprint(bp: Blueprint) -> bytes:
    """Canonical UTF-8 JSON: sorted keys, 2-space indent, bbox with 6 decimals."""
    return (_dump(blueprint_to_json(bp)) + "\n").encode("utf-8")


def _round_box(box: BBox) -> BBox:
    # serialized form has 6 decimals; keep the in-memory value identical
    return BBox(*(float(f"{v:.6f}") for v in box.as_list()))


def parse_blueprint(data: bytes | str) -> Blueprint:
    """Parse and validate a blueprint document."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedJson(f"not UTF-8: {exc}") from None
    try:
        raw = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return blueprint_from_json(raw)


def blueprint_from_json(raw: object) -> Blueprint:
    if not isinstance(raw, dict):
        raise MalformedJson("top-level value must be an object")
    if raw.get("version") != 1:
        raise MalformedJson(f"unsupported version {raw.get('version')!r}")
    try:
        raw_nodes = raw["nodes"]
        root = raw["root"]
    except KeyError as exc:
        raise MalformedJson(f"missing key {exc}") from None
    if not isinstance(raw_nodes, list) or not isinstance(root, int):
        raise MalformedJson("nodes must be a list and root an integer id")
    nodes: dict[int, UiNode] = {}
    for rn in raw_nodes:
        if not isinstance(rn, dict) or not isinstance(rn.get("id"), int):
            raise MalformedJson(f"bad node entry {rn!r}")
        nid = rn["id"]
        if nid in nodes:
            raise InvalidTree(f"duplicate node id {nid}")
        kind = NodeKind.parse(rn.get("kind"))
        payload = Payload.from_json(rn.get("payload"))
        check_payload(kind, payload)
        children = rn.get("children", [])
        if not isinstance(children, list) or not all(isinstance(c, int) for c in children):
            raise MalformedJson(f"node {nid}: children must be a list of ids")
        bbox = _round_box(BBox.parse(rn["bbox"])) if rn.get("bbox") is not None else None
        nodes[nid] = UiNode(nid, kind, payload, tuple(children), bbox)
    tree = UiTree(nodes, root)

    templates = tuple(Template.from_json(t) for t in raw.get("templates", []))
    instances: dict[int, Instance] = {}
    raw_inst = raw.get("instances", {})
    if not isinstance(raw_inst, dict):
        raise MalformedJson("instances must be an object")
    for key, entry in raw_inst.items():
        try:
            nid = int(key)
            binding = {k: (Payload.from_json(v) if v is not None else None) for k, v in entry["binding"].items()}
            instances[nid] = Instance(str(entry["template"]), binding)
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            if isinstance(exc, BlueprintError):
                raise
            raise MalformedJson(f"bad instance entry {key!r}") from None
    groups = []
    for g in raw.get("loop_groups", []):
        try:
            groups.append(LoopGroup(int(g["parent"]), str(g["template"]), tuple(int(i) for i in g["instances"])))
        except (KeyError, TypeError, ValueError):
            raise MalformedJson(f"bad loop group {g!r}") from None
    bp = Blueprint(tree, templates, instances, tuple(groups))
    bp.validate()
    return bp


def blueprints_equal(a: Blueprint, b: Blueprint) -> bool:
    return serialize_blueprint(a) == serialize_blueprint(b)
