import re

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from claimrank.corpus import ENGLISH, ORIGINAL, POST
from claimrank.errors import CorpusError
from claimrank.textprep import CleaningConfig, clean_text, combine_post

from conftest import doc

# Character-class oracle used by the property tests: the exact normative
# emoji code-point set.
EMOJI_RANGES = [
    (0x1F300, 0x1FAFF),
    (0x2600, 0x27BF),
    (0xFE0F, 0xFE0F),
    (0x200D, 0x200D),
    (0x1F1E6, 0x1F1FF),
]


def is_emoji(ch: str) -> bool:
    return any(lo <= ord(ch) <= hi for lo, hi in EMOJI_RANGES)


def test_spec_example():
    assert clean_text("Check this! https://t.co/x #fake \U0001F602") == "Check this!"


def test_empty_string():
    assert clean_text("") == ""


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("no noise here", "no noise here"),
        ("a  b\t\nc", "a b c"),
        ("  padded  ", "padded"),
        ("#only #tags", ""),
        ("keep a#b inner hash", "keep a#b inner hash"),
        ("www.example.org/x trailing", "trailing"),
        ("pre http://a.b post", "pre post"),
        ("flag \U0001F1EB\U0001F1F7 pair", "flag pair"),
        ("joined \U0001F469‍\U0001F4BB emoji", "joined emoji"),
        ("emoji-glued \U0001F602#tag", "emoji-glued"),
    ],
)
def test_cleaning_cases(raw, expected):
    assert clean_text(raw) == expected


def test_flags_can_disable_each_rule():
    raw = "x https://a #t ❤"
    assert clean_text(raw, CleaningConfig(strip_urls=False)) == "x https://a"
    assert "#t" in clean_text(raw, CleaningConfig(strip_hashtags=False))
    assert "❤" in clean_text(raw, CleaningConfig(strip_emoji=False))
    assert "  " in clean_text("a  b", CleaningConfig(collapse_whitespace=False))


TEXT_ALPHABET = st.sampled_from(
    list("ab #:/.wht")
    + ["\U0001F602", "❤", "️", "‍", "\U0001F1EB", "\t", "\n", "é", "ไ"]
    + ["http://", "https://", "www.", "#tag"]
)


@st.composite
def messy_text(draw):
    return "".join(draw(st.lists(TEXT_ALPHABET, max_size=30)))


@given(messy_text())
@settings(max_examples=300, deadline=None)
def test_clean_is_idempotent(raw):
    once = clean_text(raw)
    assert clean_text(once) == once


@given(messy_text())
@settings(max_examples=300, deadline=None)
def test_clean_output_restricted_to_input_classes(raw):
    out = clean_text(raw)
    # monotone deletion
    assert len(out) <= len(raw)
    # no stripped class survives
    assert not any(is_emoji(ch) for ch in out)
    assert not re.search(r"(?:https?://|www\.)\S+", out)
    assert not any(tok.startswith("#") for tok in out.split())
    # nothing new appears (whitespace may be rewritten to plain spaces)
    allowed = {ch for ch in raw if not ch.isspace()} | {" "}
    assert set(out) <= allowed


def test_combine_post_concatenates_ocr():
    post = doc("p", POST, text="claim A", ocr="photo text")
    assert combine_post(post) == "claim A photo text"


def test_combine_post_without_ocr():
    post = doc("p", POST, text="claim A")
    assert combine_post(post) == "claim A"


def test_combine_post_text_cleans_to_empty():
    post = doc("p", POST, text="#downwiththis", ocr="x")
    assert combine_post(post) == "x"


def test_combine_post_english_channel():
    post = doc("p", POST, text="texte", english="text", ocr="#junk ocr")
    assert combine_post(post, channel=ENGLISH) == "text ocr"


def test_combine_post_missing_english_raises():
    post = doc("p", POST, text="texte")
    with pytest.raises(CorpusError, match="English"):
        combine_post(post, channel=ENGLISH)


def test_combine_post_original_never_reads_english():
    post = doc("p", POST, text="texte")  # english absent entirely
    assert combine_post(post, channel=ORIGINAL) == "texte"


def test_combine_post_rejects_factchecks():
    from claimrank.corpus import FACTCHECK

    with pytest.raises(CorpusError, match="post"):
        combine_post(doc("f", FACTCHECK, text="fact"))
