"""Corpus loading, validation, and persistence.

The on-disk layout is three JSONL files (UTF-8, one object per line):

  posts.jsonl       {"id", "lang", "text", "english", "ocr"?}
  factchecks.jsonl  {"id", "lang", "text", "english"}
  pairs.jsonl       {"post_id", "factcheck_id"}

`english` may be null or missing; posts without it are only rejected when an
English-channel operation is requested (``require_english=True``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError

POST = "post"
FACTCHECK = "factcheck"
KINDS = (POST, FACTCHECK)

ORIGINAL = "original"
ENGLISH = "english"
CHANNELS = (ORIGINAL, ENGLISH)


@dataclass(frozen=True)
class Document:
    id: str
    kind: str
    lang: str
    text_original: str
    text_english: str | None = None
    ocr_text: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("document id must be nonempty")
        if self.kind not in KINDS:
            raise CorpusError(f"unknown document kind {self.kind!r}")
        if not self.lang:
            raise CorpusError(f"document {self.id!r}: lang must be nonempty")
        if self.lang != self.lang.lower():
            raise CorpusError(f"document {self.id!r}: lang must be lowercase")
        if not self.text_original.strip():
            raise CorpusError(f"document {self.id!r}: text is empty")


@dataclass(frozen=True)
class GoldPairs:
    pairs: frozenset[tuple[str, str]]

    def __len__(self) -> int:
        return len(self.pairs)

    def factchecks_for(self, post_id: str) -> set[str]:
        return {f for p, f in self.pairs if p == post_id}


@dataclass(frozen=True)
class Corpus:
    posts: dict[str, Document]
    factchecks: dict[str, Document]
    gold: GoldPairs
    languages: frozenset[str] = field(init=False)

    def __post_init__(self) -> None:
        for post_id, factcheck_id in self.gold.pairs:
            if post_id not in self.posts:
                raise CorpusError(f"pair references unknown post_id {post_id!r}")
            if factcheck_id not in self.factchecks:
                raise CorpusError(
                    f"pair references unknown factcheck_id {factcheck_id!r}"
                )
        langs = {d.lang for d in self.posts.values()}
        langs |= {d.lang for d in self.factchecks.values()}
        object.__setattr__(self, "languages", frozenset(langs))

    def gold_map(self) -> dict[str, set[str]]:
        """post_id -> set of gold factcheck ids (posts without pairs omitted)."""
        out: dict[str, set[str]] = {}
        for p, f in self.gold.pairs:
            out.setdefault(p, set()).add(f)
        return out


def _read_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise CorpusError(f"{path}:{lineno}: expected an object")
            rows.append((lineno, obj))
    return rows


def _require(obj: dict, key: str, path, lineno: int) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or not value:
        raise CorpusError(f"{path}:{lineno}: missing or empty {key!r}")
    return value


def _load_documents(
    path: str | Path, kind: str, require_english: bool
) -> dict[str, Document]:
    docs: dict[str, Document] = {}
    for lineno, obj in _read_jsonl(path):
        doc_id = _require(obj, "id", path, lineno)
        if doc_id in docs:
            raise CorpusError(f"{path}:{lineno}: duplicate id {doc_id!r}")
        english = obj.get("english") or None
        if require_english and english is None:
            raise CorpusError(
                f"{path}:{lineno}: document {doc_id!r} has no English translation"
            )
        try:
            docs[doc_id] = Document(
                id=doc_id,
                kind=kind,
                lang=_require(obj, "lang", path, lineno),
                text_original=_require(obj, "text", path, lineno),
                text_english=english,
                ocr_text=(obj.get("ocr") or None) if kind == POST else None,
            )
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return docs


def load_corpus(
    posts_path: str | Path,
    factchecks_path: str | Path,
    pairs_path: str | Path,
    require_english: bool = False,
) -> Corpus:
    """Load and validate a corpus from its three JSONL files.

    Load order does not matter: documents are keyed by id and pairs are a set.
    Raises CorpusError naming the file and line for any malformed input, and
    naming the offending id for dangling pair references.
    """
    posts = _load_documents(posts_path, POST, require_english)
    factchecks = _load_documents(factchecks_path, FACTCHECK, require_english)
    pairs = set()
    for lineno, obj in _read_jsonl(pairs_path):
        post_id = _require(obj, "post_id", pairs_path, lineno)
        factcheck_id = _require(obj, "factcheck_id", pairs_path, lineno)
        if post_id not in posts:
            raise CorpusError(
                f"{pairs_path}:{lineno}: pair references unknown post_id {post_id!r}"
            )
        if factcheck_id not in factchecks:
            raise CorpusError(
                f"{pairs_path}:{lineno}: pair references unknown "
                f"factcheck_id {factcheck_id!r}"
            )
        pairs.add((post_id, factcheck_id))
    return Corpus(posts=posts, factchecks=factchecks, gold=GoldPairs(frozenset(pairs)))


def save_corpus(corpus: Corpus, out_dir: str | Path) -> dict[str, Path]:
    """Write the corpus back to canonical JSONL (ids sorted, keys sorted).

    Returns the mapping of logical name -> written path. ``load_corpus`` on the
    result reproduces the corpus field-by-field.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "posts": out / "posts.jsonl",
        "factchecks": out / "factchecks.jsonl",
        "pairs": out / "pairs.jsonl",
    }

    def dump(obj: dict) -> str:
        return json.dumps(obj, ensure_ascii=False, sort_keys=True) + "\n"

    with open(paths["posts"], "w", encoding="utf-8") as fh:
        for doc in sorted(corpus.posts.values(), key=lambda d: d.id):
            row = {"id": doc.id, "lang": doc.lang, "text": doc.text_original}
            if doc.text_english is not None:
                row["english"] = doc.text_english
            if doc.ocr_text is not None:
                row["ocr"] = doc.ocr_text
            fh.write(dump(row))
    with open(paths["factchecks"], "w", encoding="utf-8") as fh:
        for doc in sorted(corpus.factchecks.values(), key=lambda d: d.id):
            row = {"id": doc.id, "lang": doc.lang, "text": doc.text_original}
            if doc.text_english is not None:
                row["english"] = doc.text_english
            fh.write(dump(row))
    with open(paths["pairs"], "w", encoding="utf-8") as fh:
        for post_id, factcheck_id in sorted(corpus.gold.pairs):
            fh.write(dump({"post_id": post_id, "factcheck_id": factcheck_id}))
    return paths


def split_by_language(corpus: Corpus, lang: str) -> tuple[list[str], list[str]]:
    """Ids of posts and fact-checks in `lang`, each in lexicographic order.

    An unknown language yields two empty lists.
    """
    post_ids = sorted(d.id for d in corpus.posts.values() if d.lang == lang)
    factcheck_ids = sorted(d.id for d in corpus.factchecks.values() if d.lang == lang)
    return post_ids, factcheck_ids
