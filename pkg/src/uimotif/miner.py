"""Repeated-subtree mining: canonical hashing, near-duplicate merging, packing."""
from __future__ import annotations

import hashlib
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .model import (
    NO_PAYLOAD,
    Blueprint,
    BlueprintError,
    Instance,
    LoopGroup,
    NodeKind,
    PayloadType,
    PROP_TYPE_OF_PAYLOAD,
    PropSpec,
    SkeletonNode,
    Template,
    UiTree,
)
from .treedist import label_lower_bound, zhang_shasha

_HASH_KEY = b"uimotif.canonical.v1"
PAYLOAD_KINDS = frozenset({NodeKind.TEXT, NodeKind.MEDIA, NodeKind.CONTROL, NodeKind.LINK})
SIZE_GATE = 0.30


class UnknownNode(BlueprintError):
    pass


class StructuralMismatch(BlueprintError):
    pass


@dataclass(frozen=True)
class MinerConfig:
    eta: float = 0.15
    min_size: int = 2
    min_support: int = 2

    def __post_init__(self) -> None:
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if self.min_size < 2 or self.min_support < 2:
            raise ValueError("min_size and min_support must be at least 2")


@dataclass(frozen=True)
class Shape:
    """Payload-abstracted subtree; ``optional`` marks leaves some occurrences lack."""

    kind: NodeKind
    ptype: PayloadType
    children: tuple["Shape", ...] = ()
    optional: bool = False
    _hash: int = field(init=False, compare=False, repr=False)

    def __post_init__(self) -> None:
        # shapes are hashed heavily during merging; children hashes are cached already
        object.__setattr__(self, "_hash", hash((self.kind, self.ptype, self.children, self.optional)))

    def __hash__(self) -> int:
        return self._hash

    def iter(self):
        yield self
        for c in self.children:
            yield from c.iter()

    @property
    def label(self) -> tuple:
        return (self.kind, self.ptype)

    @property
    def is_leaf(self) -> bool:
        return not self.children


@dataclass(frozen=True)
class CanonicalForm:
    canonical_string: str
    hash: bytes

    @property
    def hex(self) -> str:
        return self.hash.hex()


def _node_hash(kind: str, ptype: str, optional: bool, child_hashes: Sequence[bytes]) -> bytes:
    h = hashlib.blake2b(digest_size=16, key=_HASH_KEY)
    h.update(f"{kind}|{ptype}|{int(optional)}|{len(child_hashes)}|".encode())
    for c in child_hashes:
        h.update(c)
    return h.digest()


def _node_string(kind: str, ptype: str, optional: bool, child_strings: Sequence[str]) -> str:
    head = ("?" if optional else "") + kind + ("" if ptype == "none" else ":" + ptype)
    return head + "(" + ",".join(child_strings) + ")" if child_strings else head


def shape_canonical(shape: Shape) -> CanonicalForm:
    def visit(s: Shape) -> tuple[str, bytes]:
        parts = [visit(c) for c in s.children]
        return (
            _node_string(s.kind.value, s.ptype.value, s.optional, [p[0] for p in parts]),
            _node_hash(s.kind.value, s.ptype.value, s.optional, [p[1] for p in parts]),
        )

    return CanonicalForm(*visit(shape))


def shape_of(tree: UiTree, node: int) -> Shape:
    n = tree[node]
    return Shape(n.kind, n.payload.type, tuple(shape_of(tree, c) for c in n.children))


def canonicalize(tree: UiTree, node: int) -> CanonicalForm:
    if node not in tree.nodes:
        raise UnknownNode(f"node {node} not in tree")
    string, digest, _ = _bottom_up(tree, node)[node]
    return CanonicalForm(string, digest)


def _bottom_up(tree: UiTree, start: int, counter: Optional[list[int]] = None) -> dict[int, tuple[str, bytes, int]]:
    """(canonical string, hash, size) for every node under ``start`` in one postorder pass."""
    info: dict[int, tuple[str, bytes, int]] = {}
    stack = [(start, False)]
    while stack:
        nid, done = stack.pop()
        if counter is not None:
            counter[0] += 1
        node = tree[nid]
        if not done:
            stack.append((nid, True))
            stack.extend((c, False) for c in reversed(node.children))
            continue
        kids = [info[c] for c in node.children]
        kind, ptype = node.kind.value, node.payload.type.value
        info[nid] = (
            _node_string(kind, ptype, False, [k[0] for k in kids]),
            _node_hash(kind, ptype, False, [k[1] for k in kids]),
            1 + sum(k[2] for k in kids),
        )
    return info


@dataclass(frozen=True)
class MotifCandidate:
    canonical: CanonicalForm
    shape: Shape
    occurrences: tuple[int, ...]
    size: int
    labels: tuple = field(default=(), compare=False, repr=False)

    @property
    def support(self) -> int:
        return len(self.occurrences)

    @property
    def score(self) -> int:
        return self.size * self.support

    @classmethod
    def from_shape(cls, shape: Shape, occurrences) -> "MotifCandidate":
        labels = tuple(s.label for s in shape.iter())
        return cls(shape_canonical(shape), shape, tuple(sorted(set(occurrences))), len(labels), labels)


def _order_key(c: MotifCandidate):
    return (-c.score, c.canonical.canonical_string)


def collect_candidates(tree: UiTree, cfg: MinerConfig = MinerConfig(),
                       counter: Optional[list[int]] = None) -> list[MotifCandidate]:
    """Bucket every subtree by hash and keep repeated ones.

    Hash buckets are split by canonical string, so a hash collision can never
    fuse two different structures. ``counter[0]`` is incremented per node visit.
    """
    info = _bottom_up(tree, tree.root, counter)
    buckets: dict[bytes, list[int]] = defaultdict(list)
    for nid in tree.preorder():
        if info[nid][2] >= cfg.min_size:
            buckets[info[nid][1]].append(nid)
    out = []
    for members in buckets.values():
        if len(members) < cfg.min_support:
            continue
        by_string: dict[str, list[int]] = defaultdict(list)
        for nid in members:
            by_string[info[nid][0]].append(nid)
        for members_same in by_string.values():
            if len(members_same) >= cfg.min_support:
                out.append(MotifCandidate.from_shape(shape_of(tree, members_same[0]), members_same))
    out.sort(key=_order_key)
    return out


# --- near-duplicate merging ---------------------------------------------------


def shape_ted(a: Shape, b: Shape) -> int:
    return zhang_shasha(a, b, lambda s: s.children, lambda s: s.label)


def _optionalizable(s: Shape) -> bool:
    return s.is_leaf and s.ptype is not PayloadType.NONE


def anti_unify(a: Shape, b: Shape, _memo: Optional[dict] = None) -> Optional[Shape]:
    """Most specific common generalization of two shapes, or None.

    Children are aligned in order; unaligned children must be payload leaves
    and become optional slots. Mismatches that cannot be typed (different
    kind or payload type at one site, unmatched containers) reject the merge.
    """
    if a.label != b.label:
        return None
    memo = {} if _memo is None else _memo
    if (a, b) in memo:
        return memo[(a, b)]
    ca, cb = a.children, b.children

    def pair(i: int, j: int) -> Optional[Shape]:
        return anti_unify(ca[i], cb[j], memo)

    # best[i][j]: (matched count, children list) for suffixes ca[i:], cb[j:]
    best: dict[tuple[int, int], Optional[tuple[int, tuple[Shape, ...]]]] = {}
    for i in range(len(ca), -1, -1):
        for j in range(len(cb), -1, -1):
            if i == len(ca) and j == len(cb):
                best[(i, j)] = (0, ())
                continue
            options = []
            if i < len(ca) and j < len(cb):
                u = pair(i, j)
                rest = best[(i + 1, j + 1)]
                if u is not None and rest is not None:
                    options.append((rest[0] + 1, (u,) + rest[1]))
            if i < len(ca) and _optionalizable(ca[i]):
                rest = best[(i + 1, j)]
                if rest is not None:
                    options.append((rest[0], (_as_optional(ca[i]),) + rest[1]))
            if j < len(cb) and _optionalizable(cb[j]):
                rest = best[(i, j + 1)]
                if rest is not None:
                    options.append((rest[0], (_as_optional(cb[j]),) + rest[1]))
            # first option with the maximal match count wins: match, skip a, skip b
            best[(i, j)] = max(options, key=lambda o: o[0]) if options else None
    result = best[(0, 0)]
    out = None if result is None else Shape(a.kind, a.ptype, result[1], a.optional or b.optional)
    memo[(a, b)] = out
    return out


def _as_optional(s: Shape) -> Shape:
    return Shape(s.kind, s.ptype, s.children, True)


def _size_gate(a: int, b: int) -> bool:
    big = max(a, b)
    return big - min(a, b) <= SIZE_GATE * big


def normalized_distance(a: MotifCandidate, b: MotifCandidate) -> float:
    return shape_ted(a.shape, b.shape) / max(a.size, b.size)


def _try_merge(a: MotifCandidate, b: MotifCandidate, eta: float, memo: dict) -> Optional[Shape]:
    """Generalization of ``a`` and ``b`` if they are near duplicates, else None.

    Anti-unification aligns the two shapes and deletes what it cannot align;
    that edit script costs ``2|u| - |a| - |b|``. The merge needs this cost
    within the threshold and equal to the true edit distance: a cheaper
    script would relabel some site, i.e. put two payload types in one slot.
    The distance is only computed when the size difference does not already
    pin it down.
    """
    if not _size_gate(a.size, b.size):
        return None
    limit = eta * max(a.size, b.size)
    if label_lower_bound(a.labels, b.labels) > limit:
        return None
    unified = anti_unify(a.shape, b.shape, memo)
    if unified is None:
        return None
    cost = 2 * sum(1 for _ in unified.iter()) - a.size - b.size
    if cost > limit:
        return None
    if cost > abs(a.size - b.size) and shape_ted(a.shape, b.shape) < cost:
        return None
    return unified


def merge_near_duplicates(cands: Sequence[MotifCandidate], cfg: MinerConfig = MinerConfig()) -> list[MotifCandidate]:
    """Fuse candidates whose normalized TED is within ``cfg.eta``, to a fixpoint.

    After each merge the scan restarts from the best-ranked pair; verdicts for
    unchanged pairs are cached by canonical string.
    """
    current = sorted(cands, key=_order_key)
    verdicts: dict[tuple[str, str], Optional[Shape]] = {}
    memo: dict = {}
    merged = True
    while merged:
        merged = False
        for i in range(len(current)):
            for j in range(i + 1, len(current)):
                a, b = current[i], current[j]
                key = (a.canonical.canonical_string, b.canonical.canonical_string)
                if key not in verdicts:
                    verdicts[key] = _try_merge(a, b, cfg.eta, memo)
                unified = verdicts[key]
                if unified is None:
                    continue
                fused = MotifCandidate.from_shape(unified, a.occurrences + b.occurrences)
                current = [c for k, c in enumerate(current) if k not in (i, j)] + [fused]
                current.sort(key=_order_key)
                merged = True
                break
            if merged:
                break
    return current


# --- matching, props, packing -------------------------------------------------

# match tree: (node id, tuple of child matches aligned with shape.children; None = absent)
Match = tuple


def match_shape(shape: Shape, tree: UiTree, nid: int) -> Optional[Match]:
    node = tree[nid]
    if node.kind != shape.kind or node.payload.type != shape.ptype:
        return None
    kids = node.children
    sc = shape.children

    def align(si: int, ci: int) -> Optional[tuple]:
        if si == len(sc):
            return () if ci == len(kids) else None
        if ci < len(kids):
            m = match_shape(sc[si], tree, kids[ci])
            if m is not None:
                rest = align(si + 1, ci + 1)
                if rest is not None:
                    return (m,) + rest
        if sc[si].optional:
            rest = align(si + 1, ci)
            if rest is not None:
                return (None,) + rest
        return None

    aligned = align(0, 0)
    return None if aligned is None else (nid, aligned)


def _walk(shape: Shape, matches: list[Optional[Match]]):
    """Yield (shape node, per-occurrence matched node ids or None) in preorder."""
    yield shape, [m[0] if m is not None else None for m in matches]
    for k, child in enumerate(shape.children):
        yield from _walk(child, [m[1][k] if m is not None else None for m in matches])


def extract_props(shape: Shape, tree: UiTree, occurrences: Sequence[int]):
    """Build the template for ``shape`` and one binding per occurrence.

    Payload-bearing nodes are named ``<kind>_<n>`` with ``n`` counting payload
    kinds in preorder. Nodes whose payload is identical everywhere stay
    constant; optional leaves always become props.
    """
    matches = []
    for occ in occurrences:
        m = match_shape(shape, tree, occ)
        if m is None:
            raise StructuralMismatch(f"node {occ} does not match {shape_canonical(shape).canonical_string}")
        matches.append(m)
    props: list[PropSpec] = []
    bindings: list[dict] = [{} for _ in occurrences]
    counter = 0

    def build(s: Shape, ms: list) -> SkeletonNode:
        nonlocal counter
        ids = [m[0] if m is not None else None for m in ms]
        payload, prop = NO_PAYLOAD, None
        if s.kind in PAYLOAD_KINDS:
            name = f"{s.kind.value}_{counter}"
            counter += 1
            values = [tree[i].payload if i is not None else None for i in ids]
            if s.optional or (s.ptype is not PayloadType.NONE and len(set(values)) > 1):
                prop = name
                props.append(PropSpec.for_type(name, PROP_TYPE_OF_PAYLOAD[s.ptype], s.optional))
                for b, v in zip(bindings, values):
                    b[name] = v
            else:
                payload = values[0]
        children = tuple(
            build(c, [m[1][k] if m is not None else None for m in ms])
            for k, c in enumerate(s.children)
        )
        return SkeletonNode(s.kind, payload, prop, s.optional, children)

    skeleton = build(shape, matches)
    template = Template(shape_canonical(shape).hex, skeleton, tuple(props), len(occurrences))
    return template, bindings


def pack_instances(cands: Sequence[MotifCandidate], tree: UiTree, cfg: MinerConfig = MinerConfig()) -> Blueprint:
    """Greedy non-overlapping selection of occurrences, best score first.

    A candidate whose non-conflicting occurrences number fewer than
    ``min_support`` is dropped without claiming anything.
    """
    pos = {nid: i for i, nid in enumerate(tree.preorder())}
    claimed: set[int] = set()
    accepted: list[tuple[MotifCandidate, list[int]]] = []
    for cand in sorted(cands, key=_order_key):
        taken: list[int] = []
        taken_nodes: set[int] = set()
        for occ in sorted(cand.occurrences, key=pos.__getitem__):
            nodes = tree.subtree_ids(occ)
            if claimed.isdisjoint(nodes) and taken_nodes.isdisjoint(nodes):
                if match_shape(cand.shape, tree, occ) is None:
                    continue
                taken.append(occ)
                taken_nodes.update(nodes)
        if len(taken) >= cfg.min_support:
            claimed |= taken_nodes
            accepted.append((cand, taken))

    templates = []
    instances: dict[int, Instance] = {}
    for cand, occs in accepted:
        template, bindings = extract_props(cand.shape, tree, occs)
        templates.append(template)
        for occ, b in zip(occs, bindings):
            instances[occ] = Instance(template.template_id, b)

    groups = []
    for parent in tree.preorder():
        run: list[int] = []
        for child in tree[parent].children + (None,):
            tid = instances[child].template_id if child in instances else None
            if run and (tid is None or tid != instances[run[0]].template_id):
                if len(run) >= 2:
                    groups.append(LoopGroup(parent, instances[run[0]].template_id, tuple(run)))
                run = []
            if tid is not None:
                run.append(child)
    bp = Blueprint(tree, tuple(sorted(templates, key=lambda t: t.template_id)), instances, tuple(groups))
    return bp


def mine(tree: UiTree, cfg: MinerConfig = MinerConfig()) -> Blueprint:
    cands = collect_candidates(tree, cfg)
    cands = merge_near_duplicates(cands, cfg)
    bp = pack_instances(cands, tree, cfg)
    bp.validate()
    return bp


def covered_nodes(bp: Blueprint) -> int:
    return sum(len(bp.tree.subtree_ids(n)) for n in bp.instances)
