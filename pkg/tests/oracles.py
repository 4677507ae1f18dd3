"""Independent brute-force oracles used by the test-suite."""
from __future__ import annotations

import itertools
import random

from uimotif.model import NodeKind, Payload, PayloadType, UiNode, UiTree


def _flatten(tree: UiTree):
    """Preorder index, ancestor sets and labels."""
    order = list(tree.preorder())
    pos = {n: i for i, n in enumerate(order)}
    parent = tree.parents()
    labels = [(tree[n].kind, tree[n].payload.type) for n in order]
    anc = []
    for n in order:
        s = set()
        p = parent.get(n)
        while p is not None:
            s.add(pos[p])
            p = parent.get(p)
        anc.append(s)
    return labels, anc


def brute_force_ted(a: UiTree, b: UiTree) -> int:
    """Minimum edit-script cost by enumerating every valid (Tai) mapping.

    A mapping M between preorder positions is valid iff it is one-to-one and
    preserves both ancestry and left-to-right order; every edit script induces
    one and cost(M) = relabels + unmapped nodes of a + unmapped nodes of b.
    """
    la, anc_a = _flatten(a)
    lb, anc_b = _flatten(b)
    na, nb = len(la), len(lb)
    best = na + nb
    for k in range(0, min(na, nb) + 1):
        for sa in itertools.combinations(range(na), k):
            for sb in itertools.permutations(range(nb), k):
                pairs = list(zip(sa, sb))
                ok = True
                for (i1, j1), (i2, j2) in itertools.combinations(pairs, 2):
                    # ancestry preserved both ways
                    if (i1 in anc_a[i2]) != (j1 in anc_b[j2]) or (i2 in anc_a[i1]) != (j2 in anc_b[j1]):
                        ok = False
                        break
                    # preorder order preserved (with ancestry, this fixes sibling order)
                    if (i1 < i2) != (j1 < j2):
                        ok = False
                        break
                if not ok:
                    continue
                cost = sum(la[i] != lb[j] for i, j in pairs) + (na - k) + (nb - k)
                best = min(best, cost)
    return best


KINDS_FOR_RANDOM = [NodeKind.ROW, NodeKind.TILE, NodeKind.TEXT, NodeKind.MEDIA]


def random_tree(rng: random.Random, max_nodes: int) -> UiTree:
    n = rng.randint(1, max_nodes)
    parent = [None] + [rng.randrange(i) for i in range(1, n)]
    kids = {i: [] for i in range(n)}
    for i in range(1, n):
        kids[parent[i]].append(i)
    nodes = {}
    for i in range(n):
        if kids[i]:
            kind = rng.choice([NodeKind.ROW, NodeKind.TILE])
            payload = Payload()
        else:
            kind = rng.choice(KINDS_FOR_RANDOM)
            payload = {
                NodeKind.TEXT: Payload(PayloadType.TEXT, "t"),
                NodeKind.MEDIA: Payload(PayloadType.IMAGE, "m.png"),
            }.get(kind, Payload())
        nodes[i] = UiNode(i, kind, payload, tuple(kids[i]))
    return UiTree(nodes, 0)


def optimal_cover(tree: UiTree, occurrence_sets: list[list[int]], min_support: int) -> int:
    """Most nodes coverable by node-disjoint occurrences, each motif used 0 or >= min_support times.

    Plain exhaustive search over include/exclude decisions for every
    (motif, occurrence) pair.
    """
    items = []
    for m, occs in enumerate(occurrence_sets):
        for occ in occs:
            items.append((m, frozenset(tree.subtree_ids(occ))))
    best = 0

    def search(i: int, used: frozenset, counts: tuple, covered: int) -> None:
        nonlocal best
        if i == len(items):
            if all(c == 0 or c >= min_support for c in counts):
                best = max(best, covered)
            return
        m, nodes = items[i]
        if used.isdisjoint(nodes):
            bumped = counts[:m] + (counts[m] + 1,) + counts[m + 1:]
            search(i + 1, used | nodes, bumped, covered + len(nodes))
        search(i + 1, used, counts, covered)

    search(0, frozenset(), (0,) * len(occurrence_sets), 0)
    return best
