import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from uimotif.miner import mine  # noqa: E402
from uimotif.model import build_tree, image, text, url  # noqa: E402
from uimotif.synth import synth_corpus  # noqa: E402


def card(n: int, extra_link: bool = False):
    """Five-node product card; ``extra_link`` adds a sixth node."""
    kids = [
        ("media", image(f"/img/{n}.png")),
        ("text", text(f"Item {n}")),
        ("text", text("Buy now")),
        ("link", url(f"/p/{n}")),
    ]
    if extra_link:
        kids.append(("link", url(f"/share/{n}")))
    return ("tile", kids)


@pytest.fixture
def card_page():
    """A stack holding three cards: one loop group of length 3."""
    return build_tree(("frame", [("stack", [card(1), card(2), card(3)])]))


@pytest.fixture
def card_blueprint(card_page):
    return mine(card_page)


@pytest.fixture(scope="session")
def corpus():
    return synth_corpus()


@pytest.fixture(scope="session")
def mined_corpus(corpus):
    return [mine(d.tree) for d in corpus]
