"""Small hand-built trees shared by the miner and acceptance tests."""
from conftest import card
from uimotif.model import build_tree, image, text, url


def small_card(n):
    return ("tile", [("media", image(f"{n}.png")), ("text", text(f"t{n}"))])


def variant_tree():
    return build_tree(("stack", [card(1), card(2), card(3, extra_link=True), card(4, extra_link=True)]))


def starvation_fixture():
    cards = [small_card(i) for i in range(5)]
    return build_tree(("stack", [("row", cards[0:2]), ("row", cards[2:4]), cards[4]]))


PACKING_FIXTURES = {
    "starvation": starvation_fixture,
    "single_row": lambda: build_tree(("row", [small_card(i) for i in range(3)])),
    "nested_rows": lambda: build_tree(("frame", [("row", [small_card(1), small_card(2)]),
                                                 ("row", [small_card(3), small_card(4)])])),
    "two_motifs": lambda: build_tree(("frame", [
        small_card(1), small_card(2), ("row", [("text", text("a")), ("link", url("/a"))]),
        ("row", [("text", text("b")), ("link", url("/b"))]), ("text", text("c"))])),
    "cards_with_variant": lambda: build_tree(("stack", [card(1), card(2), card(3, extra_link=True)])),
    "deep_pairs": lambda: build_tree(("frame", [
        ("stack", [("row", [("text", text("a")), ("text", text("b"))]), ("media", image("c"))]),
        ("stack", [("row", [("text", text("d")), ("text", text("e"))]), ("media", image("f"))]),
        ("row", [("text", text("g")), ("text", text("h"))])])),
    "three_of_a_kind": lambda: build_tree(("stack", [
        ("tile", [("text", text("a")), ("text", text("b"))]),
        ("tile", [("text", text("c")), ("text", text("d"))]),
        ("tile", [("text", text("e")), ("text", text("f")), ("text", text("g"))]),
        ("tile", [("text", text("h")), ("text", text("i")), ("text", text("j"))])])),
}
