import json

import pytest

from claimrank.corpus import (
    FACTCHECK,
    POST,
    load_corpus,
    save_corpus,
    split_by_language,
)
from claimrank.errors import CorpusError

from conftest import small_corpus


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def corpus_files(tmp_path, posts, factchecks, pairs):
    paths = (
        tmp_path / "posts.jsonl",
        tmp_path / "factchecks.jsonl",
        tmp_path / "pairs.jsonl",
    )
    write_jsonl(paths[0], posts)
    write_jsonl(paths[1], factchecks)
    write_jsonl(paths[2], pairs)
    return paths


POSTS = [
    {"id": "p1", "lang": "fra", "text": "un claim", "english": "a claim"},
    {"id": "p2", "lang": "tha", "text": "thai text", "english": "thai text",
     "ocr": "image words"},
]
FACTCHECKS = [
    {"id": "f1", "lang": "fra", "text": "fact un", "english": "fact one"},
    {"id": "f2", "lang": "tha", "text": "fact song", "english": "fact two"},
    {"id": "f3", "lang": "fra", "text": "fact trois", "english": "fact three"},
]
PAIRS = [
    {"post_id": "p1", "factcheck_id": "f1"},
    {"post_id": "p2", "factcheck_id": "f2"},
]


def test_load_counts(tmp_path):
    corpus = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS))
    assert len(corpus.posts) == 2
    assert len(corpus.factchecks) == 3
    assert len(corpus.gold) == 2
    assert corpus.languages == {"fra", "tha"}
    assert corpus.posts["p2"].ocr_text == "image words"


def test_load_is_order_independent(tmp_path):
    a = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS))
    sub = tmp_path / "rev"
    sub.mkdir()
    b = load_corpus(
        *corpus_files(sub, POSTS[::-1], FACTCHECKS[::-1], PAIRS[::-1])
    )
    assert a == b


def test_dangling_pair_reference_names_the_id(tmp_path):
    pairs = PAIRS + [{"post_id": "p1", "factcheck_id": "f9"}]
    with pytest.raises(CorpusError, match="f9"):
        load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, pairs))


def test_dangling_post_reference(tmp_path):
    pairs = [{"post_id": "missing", "factcheck_id": "f1"}]
    with pytest.raises(CorpusError, match="missing"):
        load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, pairs))


def test_empty_pairs_file_is_valid(tmp_path):
    corpus = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, []))
    assert len(corpus.gold) == 0


def test_malformed_line_reports_line_number(tmp_path):
    paths = corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS)
    with open(paths[0], "a", encoding="utf-8") as fh:
        fh.write("{not json\n")
    with pytest.raises(CorpusError, match=":3"):
        load_corpus(*paths)


def test_duplicate_id_rejected(tmp_path):
    with pytest.raises(CorpusError, match="duplicate id 'p1'"):
        load_corpus(*corpus_files(tmp_path, POSTS + [POSTS[0]], FACTCHECKS, PAIRS))


def test_duplicate_pairs_are_deduplicated(tmp_path):
    corpus = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS + PAIRS))
    assert len(corpus.gold) == 2


def test_empty_text_rejected(tmp_path):
    posts = [{"id": "p1", "lang": "fra", "text": "   ", "english": "x"}]
    with pytest.raises(CorpusError, match="empty"):
        load_corpus(*corpus_files(tmp_path, posts, FACTCHECKS, []))


def test_missing_english_rejected_only_when_required(tmp_path):
    posts = [{"id": "p1", "lang": "fra", "text": "texte"}]
    paths = corpus_files(tmp_path, posts, FACTCHECKS, [])
    corpus = load_corpus(*paths)
    assert corpus.posts["p1"].text_english is None
    with pytest.raises(CorpusError, match="English"):
        load_corpus(*paths, require_english=True)


def test_split_by_language_matches_brute_force_scan(tmp_path):
    corpus = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS))
    for lang in sorted(corpus.languages):
        post_ids, fact_ids = split_by_language(corpus, lang)
        # brute-force oracle: scan every document and filter
        assert post_ids == sorted(
            d.id for d in corpus.posts.values() if d.lang == lang
        )
        assert fact_ids == sorted(
            d.id for d in corpus.factchecks.values() if d.lang == lang
        )


def test_split_unknown_language_is_empty():
    corpus = small_corpus()
    assert split_by_language(corpus, "xxx") == ([], [])


def test_split_partitions_the_corpus():
    corpus = small_corpus()
    post_total = sum(
        len(split_by_language(corpus, lang)[0]) for lang in corpus.languages
    )
    fact_total = sum(
        len(split_by_language(corpus, lang)[1]) for lang in corpus.languages
    )
    assert post_total == len(corpus.posts)
    assert fact_total == len(corpus.factchecks)


def test_save_load_round_trip(tmp_path):
    corpus = load_corpus(*corpus_files(tmp_path, POSTS, FACTCHECKS, PAIRS))
    out = tmp_path / "saved"
    paths = save_corpus(corpus, out)
    again = load_corpus(paths["posts"], paths["factchecks"], paths["pairs"])
    assert again == corpus


def test_gold_map():
    corpus = small_corpus()
    assert corpus.gold_map() == {"p1": {"f1"}, "p2": {"f2"}, "p3": {"f3"}}
