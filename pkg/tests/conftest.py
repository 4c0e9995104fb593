import numpy as np
import pytest

from claimrank.corpus import Corpus, Document, FACTCHECK, GoldPairs, ORIGINAL, POST
from claimrank.embeddings import EmbeddingMatrix


def unit_rows(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    rows = rng.normal(size=(n, dim))
    return (rows / np.linalg.norm(rows, axis=1, keepdims=True)).astype(np.float32)


def make_matrix(
    rng: np.random.Generator,
    n: int,
    dim: int,
    model_id: str = "m1",
    channel: str = ORIGINAL,
    kind: str = FACTCHECK,
    prefix: str = "f",
) -> EmbeddingMatrix:
    return EmbeddingMatrix(
        model_id=model_id,
        channel=channel,
        kind=kind,
        ids=[f"{prefix}{i:05d}" for i in range(n)],
        vectors=unit_rows(rng, n, dim),
    )


def doc(doc_id: str, kind: str, lang: str = "eng", text: str = "some text",
        english: str | None = None, ocr: str | None = None) -> Document:
    return Document(
        id=doc_id, kind=kind, lang=lang, text_original=text,
        text_english=english, ocr_text=ocr if kind == POST else None,
    )


def small_corpus() -> Corpus:
    posts = {
        "p1": doc("p1", POST, "fra", "bonjour", english="hello"),
        "p2": doc("p2", POST, "tha", "sawasdee", english="hello there"),
        "p3": doc("p3", POST, "fra", "salut", english="hi"),
    }
    factchecks = {
        "f1": doc("f1", FACTCHECK, "fra", "claim one", english="claim one"),
        "f2": doc("f2", FACTCHECK, "tha", "claim two", english="claim two"),
        "f3": doc("f3", FACTCHECK, "fra", "claim three", english="claim three"),
    }
    gold = GoldPairs(frozenset({("p1", "f1"), ("p2", "f2"), ("p3", "f3")}))
    return Corpus(posts=posts, factchecks=factchecks, gold=gold)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
