import json

import pytest

from uimotif.model import (
    BBox,
    Blueprint,
    DanglingReference,
    InvalidBox,
    InvalidTree,
    MalformedJson,
    NodeKind,
    OverlappingInstances,
    Payload,
    PayloadMismatch,
    PayloadType,
    PropSpec,
    PropType,
    UnknownKind,
    blueprint_to_json,
    blueprints_equal,
    build_tree,
    expand,
    parse_blueprint,
    serialize_blueprint,
    text,
    trees_equal,
    url,
)


def minimal_doc(**extra):
    doc = {"version": 1, "root": 0, "nodes": [{"id": 0, "kind": "frame", "children": []}],
           "templates": [], "instances": {}, "loop_groups": []}
    doc.update(extra)
    return doc


def test_one_node_document():
    bp = parse_blueprint(json.dumps(minimal_doc()))
    assert len(bp.tree) == 1
    assert bp.templates == ()


def test_unknown_kind_rejected():
    doc = minimal_doc(nodes=[{"id": 0, "kind": "button", "children": []}])
    with pytest.raises(UnknownKind):
        parse_blueprint(json.dumps(doc))


def test_malformed_json_reports_position():
    with pytest.raises(MalformedJson, match="line 1 column"):
        parse_blueprint('{"version": 1,')


@pytest.mark.parametrize("box", [[0.5, 0.1, 0.4, 0.2], [0, 0, 1.2, 1], [0.1, 0.1, 0.1, 0.2]])
def test_degenerate_boxes(box):
    with pytest.raises(InvalidBox):
        BBox.parse(box)


def test_payload_kind_compatibility():
    with pytest.raises(PayloadMismatch):
        build_tree(("frame", [("media", text("not an image"))]))
    with pytest.raises(PayloadMismatch):
        Payload(PayloadType.TEXT, None)


def test_tree_shape_errors():
    with pytest.raises(InvalidTree):
        build_tree(("frame", [("text", text("a"), [("text", text("b"))])]))
    with pytest.raises(InvalidTree):
        build_tree(("link", url("/x"), [("media", Payload(PayloadType.IMAGE, "a.png"))]))


def test_link_may_hold_text_child():
    tree = build_tree(("frame", [("link", url("/x"), [("text", text("go"))])]))
    assert tree[1].kind is NodeKind.LINK and tree[2].kind is NodeKind.TEXT


def test_url_props_only_flow_to_src_or_href():
    assert PropSpec.for_type("link_0", PropType.URL).sinks <= frozenset({"src", "href"})
    with pytest.raises(ValueError):
        PropSpec("link_0", PropType.URL, frozenset({"class"}))


def test_round_trip_and_byte_determinism(card_blueprint):
    data = serialize_blueprint(card_blueprint)
    again = parse_blueprint(data)
    assert blueprints_equal(again, card_blueprint)
    assert serialize_blueprint(again) == data


def test_loop_group_preserves_sibling_order(card_blueprint):
    raw = blueprint_to_json(card_blueprint)
    assert raw["loop_groups"] == [{"parent": 1, "template": card_blueprint.templates[0].template_id,
                                   "instances": [2, 7, 12]}]


def test_bbox_written_with_six_decimals():
    tree = build_tree(("frame", []))
    node = tree[0]
    from dataclasses import replace
    tree = type(tree)({0: replace(node, bbox=BBox(0.1, 0.2, 0.3333333333, 1.0))}, 0)
    data = serialize_blueprint(Blueprint(tree)).decode()
    assert "0.333333" in data and "0.3333333333" not in data


def test_overlapping_instances_rejected(card_blueprint):
    raw = blueprint_to_json(card_blueprint)
    tid = raw["templates"][0]["id"]
    # instance rooted at the stack covers the card instances below it
    raw["instances"]["1"] = {"template": tid, "binding": raw["instances"]["2"]["binding"]}
    with pytest.raises(OverlappingInstances):
        parse_blueprint(json.dumps(raw))


def test_dangling_template_rejected(card_blueprint):
    raw = blueprint_to_json(card_blueprint)
    raw["instances"]["2"]["template"] = "feedface"
    with pytest.raises(DanglingReference):
        parse_blueprint(json.dumps(raw))


def test_binding_must_be_total(card_blueprint):
    raw = blueprint_to_json(card_blueprint)
    binding = raw["instances"]["2"]["binding"]
    binding.pop(sorted(binding)[0])
    with pytest.raises(ValueError):
        parse_blueprint(json.dumps(raw))


def test_expand_reproduces_tree(card_blueprint, card_page):
    assert trees_equal(expand(card_blueprint), card_page)
