"""Exact top-K cosine retrieval over precomputed embedding matrices.

Scores are dot products of unit vectors, accumulated in float64 with a fixed
per-row summation order (no BLAS dispatch), so identical inputs produce
byte-identical rankings on any machine and with any worker count. Ties are
broken by ascending fact-check id.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import CHANNELS, FACTCHECK, ORIGINAL, POST, Corpus
from .embeddings import EmbeddingMatrix
from .errors import RetrievalError

MONOLINGUAL = "monolingual"
CROSSLINGUAL = "crosslingual"
MODES = (MONOLINGUAL, CROSSLINGUAL)


@dataclass(frozen=True)
class RetrievalConfig:
    k: int = 10
    mode: str = MONOLINGUAL
    channel: str = ORIGINAL
    model_id: str = ""

    def __post_init__(self) -> None:
        if self.k < 1:
            raise RetrievalError("k must be >= 1")
        if self.mode not in MODES:
            raise RetrievalError(f"unknown mode {self.mode!r}")
        if self.channel not in CHANNELS:
            raise RetrievalError(f"unknown channel {self.channel!r}")


@dataclass(frozen=True)
class RankedList:
    post_id: str
    hits: tuple[tuple[str, float], ...]

    def hit_ids(self) -> list[str]:
        return [doc_id for doc_id, _ in self.hits]


def _dot_scores(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    # einsum keeps a fixed sequential accumulation per row; np.dot may hand
    # off to BLAS kernels whose reduction order varies with threading.
    return np.einsum("ij,j->i", rows, query)


def top_k(
    query_vec: np.ndarray,
    pool: EmbeddingMatrix,
    k: int,
    ids: list[str] | None = None,
) -> tuple[tuple[str, float], ...]:
    """The k best-scoring pool rows for a unit query vector, exactly.

    `ids` restricts the pool (e.g. to one language); None means every row.
    Result is sorted by descending score, then ascending id.
    """
    if ids is None:
        sorted_ids = sorted(pool.ids)
    else:
        sorted_ids = sorted(ids)
    if not sorted_ids:
        raise RetrievalError("retrieval pool is empty")
    if k < 1:
        raise RetrievalError("k must be >= 1")
    rows = pool.vectors[[pool.row_of(i) for i in sorted_ids]].astype(np.float64)
    query = np.asarray(query_vec, dtype=np.float64)
    scores = _dot_scores(rows, query)
    order = np.argsort(-scores, kind="stable")[: min(k, len(sorted_ids))]
    return tuple((sorted_ids[i], float(scores[i])) for i in order)


class Retriever:
    """Binds a corpus, a post matrix, and a fact-check matrix for querying."""

    def __init__(
        self,
        corpus: Corpus,
        posts: EmbeddingMatrix,
        factchecks: EmbeddingMatrix,
        cfg: RetrievalConfig,
    ) -> None:
        if posts.kind != POST:
            raise RetrievalError(f"query matrix has kind {posts.kind!r}, not post")
        if factchecks.kind != FACTCHECK:
            raise RetrievalError(
                f"pool matrix has kind {factchecks.kind!r}, not factcheck"
            )
        if posts.dim != factchecks.dim:
            raise RetrievalError(
                f"dim mismatch: posts {posts.dim} vs factchecks {factchecks.dim}"
            )
        if posts.channel != cfg.channel or factchecks.channel != cfg.channel:
            raise RetrievalError(
                f"matrices carry channels ({posts.channel}, {factchecks.channel}) "
                f"but the run requests {cfg.channel}"
            )
        self.corpus = corpus
        self.posts = posts
        self.factchecks = factchecks
        self.cfg = cfg
        # Pool rows gathered once per language (and once globally), already
        # id-sorted so a stable sort on scores yields the tie order for free.
        self._pools: dict[str | None, tuple[list[str], np.ndarray]] = {}

    def _pool(self, lang: str | None) -> tuple[list[str], np.ndarray]:
        if lang not in self._pools:
            if lang is None:
                ids = sorted(
                    i for i in self.factchecks.ids if i in self.corpus.factchecks
                )
            else:
                ids = sorted(
                    d.id
                    for d in self.corpus.factchecks.values()
                    if d.lang == lang and d.id in self.factchecks
                )
            rows = self.factchecks.vectors[
                [self.factchecks.row_of(i) for i in ids]
            ].astype(np.float64)
            self._pools[lang] = (ids, rows)
        return self._pools[lang]

    def retrieve(self, post_id: str) -> RankedList:
        post = self.corpus.posts.get(post_id)
        if post is None:
            raise RetrievalError(f"unknown post {post_id!r}")
        if post_id not in self.posts:
            raise RetrievalError(f"post {post_id!r} has no embedding")
        lang = post.lang if self.cfg.mode == MONOLINGUAL else None
        ids, rows = self._pool(lang)
        if not ids:
            raise RetrievalError(
                f"empty fact-check pool for post {post_id!r} (lang {post.lang!r})"
            )
        query = self.posts.vector(post_id).astype(np.float64)
        scores = _dot_scores(rows, query)
        order = np.argsort(-scores, kind="stable")[: min(self.cfg.k, len(ids))]
        return RankedList(
            post_id=post_id,
            hits=tuple((ids[i], float(scores[i])) for i in order),
        )

    def retrieve_many(
        self, post_ids: list[str], threads: int = 1
    ) -> list[RankedList]:
        """Rank every post in `post_ids`, results in input order.

        Queries are independent, so the result does not depend on `threads`.
        """
        for lang in {None} if self.cfg.mode == CROSSLINGUAL else {
            self.corpus.posts[p].lang for p in post_ids if p in self.corpus.posts
        }:
            self._pool(lang)  # build shared pools before forking workers
        if threads <= 1:
            return [self.retrieve(p) for p in post_ids]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(self.retrieve, post_ids))


def write_rankings(rankings: list[RankedList], path: str | Path) -> None:
    """JSONL, one post per line, scores printed at 6 decimal places."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in rankings:
            hits = ",".join(
                '{"id":%s,"score":%.6f}' % (json.dumps(doc_id, ensure_ascii=False), s)
                for doc_id, s in ranked.hits
            )
            fh.write(
                '{"post_id":%s,"hits":[%s]}\n'
                % (json.dumps(ranked.post_id, ensure_ascii=False), hits)
            )


def read_rankings(path: str | Path) -> list[RankedList]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                out.append(
                    RankedList(
                        post_id=obj["post_id"],
                        hits=tuple((h["id"], float(h["score"])) for h in obj["hits"]),
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise RetrievalError(f"{path}:{lineno}: invalid ranking line") from exc
    return out
