import random

from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_ted, random_tree
from uimotif.model import build_tree, image, text
from uimotif.treedist import label_lower_bound, tree_edit_distance


def five_nodes(drop_last=False):
    kids = [("text", text("a")), ("media", image("b.png")), ("text", text("c")), ("text", text("d"))]
    return build_tree(("row", kids[:-1] if drop_last else kids))


def test_identity_is_zero():
    assert tree_edit_distance(five_nodes(), five_nodes()) == 0


def test_single_leaf_deletion():
    assert tree_edit_distance(five_nodes(), five_nodes(drop_last=True)) == 1


def test_payload_values_ignored_unless_strict():
    a = build_tree(("row", [("text", text("x")), ("text", text("y"))]))
    b = build_tree(("row", [("text", text("x")), ("text", text("z"))]))
    assert tree_edit_distance(a, b) == 0
    assert tree_edit_distance(a, b, strict=True) == 1


def test_matches_brute_force_on_random_pairs():
    rng = random.Random(1234)
    for _ in range(60):
        a, b = random_tree(rng, 6), random_tree(rng, 6)
        assert tree_edit_distance(a, b) == brute_force_ted(a, b)


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=60, deadline=None)
@given(seeds, seeds, seeds)
def test_metric_laws(s1, s2, s3):
    a, b, c = (random_tree(random.Random(s), 9) for s in (s1, s2, s3))
    ab = tree_edit_distance(a, b)
    assert ab == tree_edit_distance(b, a)
    assert tree_edit_distance(a, a) == 0
    assert tree_edit_distance(a, c) <= ab + tree_edit_distance(b, c)


@settings(max_examples=60, deadline=None)
@given(seeds, seeds)
def test_label_bound_is_a_lower_bound(s1, s2):
    a, b = random_tree(random.Random(s1), 8), random_tree(random.Random(s2), 8)
    la = [(n.kind, n.payload.type) for n in a.nodes.values()]
    lb = [(n.kind, n.payload.type) for n in b.nodes.values()]
    assert label_lower_bound(la, lb) <= tree_edit_distance(a, b)
