"""Social-media text cleaning and post/OCR combination.

Cleaning removes, in order: emoji code points, URLs, and whole ``#``-prefixed
tokens, then collapses whitespace. The passes repeat until the text stops
changing, so cleaning is idempotent even when one removal exposes another
(e.g. an emoji glued to the front of a hashtag).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .corpus import ENGLISH, ORIGINAL, POST, Document
from .errors import CorpusError

# Normative emoji coverage: pictographs and symbols, dingbats, variation
# selector 16, zero-width joiner, and regional indicators (flag pairs).
_EMOJI_RE = re.compile(
    "["
    "\U0001f300-\U0001faff"
    "☀-➿"
    "️"
    "‍"
    "\U0001f1e6-\U0001f1ff"
    "]"
)

# http://, https://, or www. followed by anything that is not whitespace.
_URL_RE = re.compile(r"(?:https?://|www\.)\S+")

# A whitespace-delimited token whose first character is '#'.
_HASHTAG_RE = re.compile(r"(?<!\S)#\S*")

_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class CleaningConfig:
    strip_urls: bool = True
    strip_hashtags: bool = True
    strip_emoji: bool = True
    collapse_whitespace: bool = True

    def as_dict(self) -> dict[str, bool]:
        return {
            "strip_urls": self.strip_urls,
            "strip_hashtags": self.strip_hashtags,
            "strip_emoji": self.strip_emoji,
            "collapse_whitespace": self.collapse_whitespace,
        }


def _clean_once(text: str, cfg: CleaningConfig) -> str:
    if cfg.strip_emoji:
        text = _EMOJI_RE.sub("", text)
    if cfg.strip_urls:
        text = _URL_RE.sub("", text)
    if cfg.strip_hashtags:
        text = _HASHTAG_RE.sub("", text)
    if cfg.collapse_whitespace:
        text = _WS_RE.sub(" ", text).strip()
    return text


def clean_text(raw: str, cfg: CleaningConfig | None = None) -> str:
    """Clean one string; empty output is legal."""
    cfg = cfg or CleaningConfig()
    prev = raw
    for _ in range(len(raw) + 1):
        cur = _clean_once(prev, cfg)
        if cur == prev:
            return cur
        prev = cur
    return prev


def combine_post(
    post: Document, cfg: CleaningConfig | None = None, channel: str = ORIGINAL
) -> str:
    """Cleaned post text plus cleaned OCR text, space-separated.

    Reads only the requested channel; raises CorpusError if the English
    channel is requested but absent.
    """
    if post.kind != POST:
        raise CorpusError(f"combine_post expects a post, got {post.kind!r}")
    if channel == ORIGINAL:
        text = post.text_original
    elif channel == ENGLISH:
        if post.text_english is None:
            raise CorpusError(f"post {post.id!r} has no English translation")
        text = post.text_english
    else:
        raise CorpusError(f"unknown channel {channel!r}")
    parts = [clean_text(text, cfg)]
    if post.ocr_text is not None:
        parts.append(clean_text(post.ocr_text, cfg))
    return " ".join(p for p in parts if p)
