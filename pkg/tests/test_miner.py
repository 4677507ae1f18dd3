import time

import pytest

from conftest import card
from fixtures import PACKING_FIXTURES, small_card, starvation_fixture, variant_tree
from oracles import optimal_cover
from uimotif.miner import (
    MinerConfig,
    anti_unify,
    canonicalize,
    collect_candidates,
    covered_nodes,
    extract_props,
    merge_near_duplicates,
    mine,
    normalized_distance,
    pack_instances,
    shape_of,
)
from uimotif.model import PropType, build_tree, expand, image, placeholder, text, trees_equal, url
from uimotif.synth import large_tree
from uimotif.treedist import tree_edit_distance


def test_payload_values_do_not_change_the_hash():
    tree = build_tree(("row", [("text", text("Hello")), ("text", text("World"))]))
    assert canonicalize(tree, 1) == canonicalize(tree, 2)


def test_child_order_changes_the_hash():
    tree = build_tree(("row", [
        ("tile", [("media", image("a")), ("text", text("b"))]),
        ("tile", [("text", text("b")), ("media", image("a"))]),
    ]))
    assert canonicalize(tree, 1).hash != canonicalize(tree, 4).hash
    assert canonicalize(tree, 1).canonical_string != canonicalize(tree, 4).canonical_string


def test_cards_differing_only_in_payloads_share_a_form(card_page):
    assert canonicalize(card_page, 2) == canonicalize(card_page, 7)
    assert canonicalize(card_page, 2).canonical_string == "tile(media:image,text:text,text:text,link:url)"


def test_payload_type_matters():
    tree = build_tree(("row", [("control", placeholder("p")), ("control",)]))
    assert canonicalize(tree, 1) != canonicalize(tree, 2)


def test_no_repeats_no_candidates():
    tree = build_tree(("frame", [("text", text("a")), ("media", image("b"))]))
    assert collect_candidates(tree) == []


def test_four_identical_cards_one_candidate():
    tree = build_tree(("row", [card(i) for i in range(4)]))
    cands = collect_candidates(tree)
    assert [c.support for c in cands] == [4]
    assert cands[0].size == 5


def test_nested_repetition_keeps_both_levels():
    tree = build_tree(("stack", [("row", [small_card(1), small_card(2)]), ("row", [small_card(3), small_card(4)])]))
    sizes = sorted((c.size, c.support) for c in collect_candidates(tree))
    assert sizes == [(3, 4), (7, 2)]


def test_variant_cards_distance():
    tree = variant_tree()
    assert tree_edit_distance(tree.__class__({k: tree[k] for k in tree.subtree_ids(1)}, 1),
                              tree.__class__({k: tree[k] for k in tree.subtree_ids(11)}, 11)) == 1
    small, big = sorted(collect_candidates(tree), key=lambda c: c.size)
    assert normalized_distance(small, big) == pytest.approx(1 / 6)


@pytest.mark.parametrize("eta,count", [(0.0, 2), (0.10, 2), (0.16, 2), (0.17, 1), (0.20, 1)])
def test_merge_threshold(eta, count):
    cands = merge_near_duplicates(collect_candidates(variant_tree()), MinerConfig(eta=eta))
    assert len(cands) == count


def test_merge_makes_the_extra_link_optional():
    bp = mine(variant_tree(), MinerConfig(eta=0.2))
    (tmpl,) = bp.templates
    optional = [p for p in tmpl.props if p.optional]
    assert [(p.name, p.prop_type) for p in optional] == [("link_4", PropType.URL)]
    assert bp.instances[1].binding["link_4"] is None
    assert trees_equal(expand(bp), bp.tree)


def test_size_gate_blocks_distant_sizes():
    tree = build_tree(("frame", [
        ("row", [("text", text("a")), ("text", text("b")), ("text", text("c"))]),
        ("row", [("text", text("d")), ("text", text("e")), ("text", text("f"))]),
        ("stack", [("row", [("text", text(str(i))) for i in range(9)])]),
        ("stack", [("row", [("text", text(str(i))) for i in range(9)])]),
    ]))
    cands = collect_candidates(tree)
    assert len(merge_near_duplicates(cands, MinerConfig(eta=0.9))) == len(cands)


def test_eta_zero_is_identity():
    cands = collect_candidates(variant_tree())
    assert merge_near_duplicates(cands, MinerConfig(eta=0.0)) == cands


def test_type_conflict_blocks_the_merge():
    # link vs media at the same site: cheapest edit is a relabel, so no merge at any eta
    row = lambda last: ("tile", [("text", text("a")), ("text", text("b")), last])
    tree = build_tree(("frame", [row(("link", url("/b"))), row(("link", url("/c"))),
                                 row(("media", image("b"))), row(("media", image("c")))]))
    cands = collect_candidates(tree)
    assert len(merge_near_duplicates(cands, MinerConfig(eta=0.9))) == 2


def test_anti_unify_rejects_container_mismatch():
    tree = build_tree(("frame", [("tile", [("text", text("a"))]), ("row", [("text", text("a"))])]))
    assert anti_unify(shape_of(tree, 1), shape_of(tree, 3)) is None


def test_props_follow_variation():
    tree = variant_tree()
    shape = shape_of(tree, 1)
    tmpl, bindings = extract_props(shape, tree, [1, 6])
    assert [(p.name, p.prop_type) for p in tmpl.props] == [
        ("media_0", PropType.IMAGE), ("text_1", PropType.TEXT), ("link_3", PropType.URL)]
    assert tmpl.prop("link_3").sinks == frozenset({"src", "href"})
    # "Buy now" is the same everywhere and stays in the skeleton
    assert tmpl.skeleton.children[2].payload == text("Buy now")
    assert bindings[1]["text_1"] == text("Item 2")


def test_two_disjoint_motifs_both_accepted():
    tree = build_tree(("frame", [small_card(1), small_card(2),
                                 ("row", [("text", text("x")), ("link", url("/y"))]),
                                 ("row", [("text", text("z")), ("link", url("/w"))])]))
    bp = mine(tree)
    assert sorted(t.support for t in bp.templates) == [2, 2]


def test_outer_row_starved_by_inner_cards():
    rows = [("row", [card(r * 3 + i) for i in range(3)]) for r in range(3)]
    loose = [card(100 + i) for i in range(3)]
    tree = build_tree(("stack", rows + loose))
    cands = collect_candidates(tree)
    scores = {(c.size, c.support): c.score for c in cands}
    assert scores == {(16, 3): 48, (5, 12): 60}
    bp = pack_instances(cands, tree)
    assert [(t.skeleton.size(), t.support) for t in bp.templates] == [(5, 12)]


def test_consecutive_instances_form_a_loop(card_blueprint):
    (group,) = card_blueprint.loop_groups
    assert group.instances == (2, 7, 12)


def test_interleaved_instances_do_not_loop():
    tree = build_tree(("row", [small_card(1), ("text", text("sep")), small_card(2)]))
    bp = mine(tree)
    assert len(bp.instances) == 2 and bp.loop_groups == ()


@pytest.mark.parametrize("name", sorted(PACKING_FIXTURES))
def test_greedy_packing_is_optimal_on_fixtures(name):
    tree = PACKING_FIXTURES[name]()
    assert len(tree) <= 20
    cfg = MinerConfig()
    cands = merge_near_duplicates(collect_candidates(tree, cfg), cfg)
    bp = pack_instances(cands, tree, cfg)
    assert covered_nodes(bp) == optimal_cover(tree, [list(c.occurrences) for c in cands], cfg.min_support)


def test_starvation_fixture_prefers_inner_cards():
    bp = mine(starvation_fixture())
    assert [(t.skeleton.size(), t.support) for t in bp.templates] == [(3, 5)]
    assert covered_nodes(bp) == 15


def test_min_support_three_drops_pairs():
    tree = PACKING_FIXTURES["nested_rows"]()
    assert len(mine(tree, MinerConfig(min_support=3)).templates) == 1
    assert mine(tree, MinerConfig(min_support=5)).templates == ()


def test_corpus_blueprints_expand_exactly(corpus, mined_corpus):
    for doc, bp in zip(corpus, mined_corpus):
        covered = [n for i in bp.instances for n in bp.tree.subtree_ids(i)]
        assert len(covered) == len(set(covered))
        assert tree_edit_distance(expand(bp), doc.tree) == 0
        assert sorted(len(g.instances) for g in bp.loop_groups) == sorted(doc.loop_sizes)


def test_mining_is_deterministic(corpus):
    from uimotif.model import serialize_blueprint

    for doc in corpus[:5]:
        assert serialize_blueprint(mine(doc.tree)) == serialize_blueprint(mine(doc.tree))


def test_template_count_monotone_in_eta():
    tree = build_tree(("stack", [card(1), card(2), card(3, extra_link=True), card(4, extra_link=True),
                                 small_card(5), small_card(6)]))
    counts = [len(mine(tree, MinerConfig(eta=e / 20)).templates) for e in range(11)]
    assert counts == sorted(counts, reverse=True)


def test_collection_visits_are_linear():
    tree = large_tree()
    counter = [0]
    collect_candidates(tree, MinerConfig(), counter)
    assert counter[0] <= 3 * len(tree)
    start = time.perf_counter()
    mine(tree)
    assert time.perf_counter() - start < 1.0


def test_config_validation():
    with pytest.raises(ValueError):
        MinerConfig(eta=1.5)
    with pytest.raises(ValueError):
        MinerConfig(min_support=1)
