"""Ordered tree edit distance (Zhang-Shasha, unit costs)."""
from __future__ import annotations

from collections import Counter
from typing import Callable, Hashable, Sequence, TypeVar

from .model import UiTree

N = TypeVar("N")


class _Annotated:
    """Postorder numbering, leftmost-leaf descendants and keyroots of one tree."""

    def __init__(self, root, children: Callable, label: Callable) -> None:
        self.labels: list[Hashable] = []
        self.lmd: list[int] = []
        # iterative postorder; each stack entry carries the lmd of its first child
        stack = [(root, False)]
        pending: list[list[int]] = [[]]
        while stack:
            node, expanded = stack.pop()
            if not expanded:
                stack.append((node, True))
                pending.append([])
                for c in reversed(list(children(node))):
                    stack.append((c, False))
            else:
                kids_lmd = pending.pop()
                idx = len(self.labels)
                self.labels.append(label(node))
                self.lmd.append(kids_lmd[0] if kids_lmd else idx)
                pending[-1].append(self.lmd[idx])
        seen: dict[int, int] = {}
        for i, l in enumerate(self.lmd):
            seen[l] = i  # highest postorder index per leftmost leaf
        self.keyroots = sorted(seen.values())


def zhang_shasha(a, b, children: Callable, label: Callable) -> int:
    A = _Annotated(a, children, label)
    B = _Annotated(b, children, label)
    na, nb = len(A.labels), len(B.labels)
    td = [[0] * nb for _ in range(na)]
    for i in A.keyroots:
        for j in B.keyroots:
            _treedist(i, j, A, B, td)
    return td[na - 1][nb - 1]


def _treedist(i: int, j: int, A: _Annotated, B: _Annotated, td: list[list[int]]) -> None:
    li, lj = A.lmd[i], B.lmd[j]
    m, n = i - li + 2, j - lj + 2
    fd = [[0] * n for _ in range(m)]
    for x in range(1, m):
        fd[x][0] = fd[x - 1][0] + 1
    for y in range(1, n):
        fd[0][y] = fd[0][y - 1] + 1
    ioff, joff = li - 1, lj - 1
    for x in range(li, i + 1):
        xi = x - ioff
        lx = A.lmd[x]
        row, prev = fd[xi], fd[xi - 1]
        for y in range(lj, j + 1):
            yj = y - joff
            if lx == li and B.lmd[y] == lj:
                cost = 0 if A.labels[x] == B.labels[y] else 1
                row[yj] = min(prev[yj] + 1, row[yj - 1] + 1, prev[yj - 1] + cost)
                td[x][y] = row[yj]
            else:
                p = lx - 1 - ioff
                q = B.lmd[y] - 1 - joff
                row[yj] = min(prev[yj] + 1, row[yj - 1] + 1, fd[p][q] + td[x][y])


def tree_edit_distance(a: UiTree, b: UiTree, *, strict: bool = False) -> int:
    """TED with node label (kind, payload type); ``strict`` also compares payload values."""

    def label(ref):
        node = ref[0][ref[1]]
        return (node.kind, node.payload if strict else node.payload.type)

    def children(ref):
        tree, nid = ref
        return [(tree, c) for c in tree[nid].children]

    return zhang_shasha((a, a.root), (b, b.root), children, label)


def label_lower_bound(labels_a: Sequence[Hashable], labels_b: Sequence[Hashable]) -> int:
    """Cheap lower bound on unit-cost TED: max size minus shared label multiset."""
    common = sum((Counter(labels_a) & Counter(labels_b)).values())
    return max(len(labels_a), len(labels_b)) - common
