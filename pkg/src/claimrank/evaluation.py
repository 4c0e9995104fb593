"""Success@K scoring, report assembly, and the synthetic benchmark generator.

A post counts as a success when any of its gold fact-checks appears in its
top-K hits. Reports hold one cell per language (computed from same-language
rankings), an optional crosslingual cell (full-pool rankings over a chosen
post set), and both post-weighted and unweighted averages of the language
cells — the averaging rule is ambiguous in the wild, so both are recorded.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus, Document, FACTCHECK, GoldPairs, ORIGINAL, POST
from .embeddings import EmbeddingMatrix
from .errors import EvaluationError
from .retrieval import RankedList

# Column order used by the text report; languages outside this list follow
# alphabetically.
PREFERRED_LANG_ORDER = ("fra", "spa", "eng", "por", "tha", "deu", "msa", "ara")


@dataclass(frozen=True)
class Cell:
    value: float
    n_posts: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.value <= 1.0:
            raise EvaluationError(f"S@K cell outside [0, 1]: {self.value}")
        if self.n_posts < 1:
            raise EvaluationError("cell computed over an empty post set")


@dataclass(frozen=True)
class EvalReport:
    model_id: str
    k: int
    per_lang: dict[str, Cell]
    crosslingual: Cell | None
    average: float  # post-weighted mean over the language cells
    average_unweighted: float

    def to_dict(self) -> dict:
        return {
            "model_id": self.model_id,
            "k": self.k,
            "per_lang": {
                lang: {"s_at_k": c.value, "n_posts": c.n_posts}
                for lang, c in sorted(self.per_lang.items())
            },
            "crosslingual": (
                None
                if self.crosslingual is None
                else {
                    "s_at_k": self.crosslingual.value,
                    "n_posts": self.crosslingual.n_posts,
                }
            ),
            "average": self.average,
            "average_unweighted": self.average_unweighted,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "EvalReport":
        try:
            cross = obj["crosslingual"]
            return cls(
                model_id=obj["model_id"],
                k=int(obj["k"]),
                per_lang={
                    lang: Cell(value=c["s_at_k"], n_posts=int(c["n_posts"]))
                    for lang, c in obj["per_lang"].items()
                },
                crosslingual=(
                    None
                    if cross is None
                    else Cell(value=cross["s_at_k"], n_posts=int(cross["n_posts"]))
                ),
                average=float(obj["average"]),
                average_unweighted=float(obj["average_unweighted"]),
            )
        except (KeyError, TypeError) as exc:
            raise EvaluationError(f"malformed report object: {exc}") from exc


def success_at_k(rankings: list[RankedList], gold: GoldPairs, k: int) -> float:
    """Fraction of ranked posts whose top-k hits contain a gold fact-check.

    Every ranked post must have at least one gold pair; posts without gold
    must be filtered out upstream.
    """
    if k < 1:
        raise EvaluationError("k must be >= 1")
    if not rankings:
        raise EvaluationError("no rankings to score")
    gold_map: dict[str, set[str]] = {}
    for post_id, factcheck_id in gold.pairs:
        gold_map.setdefault(post_id, set()).add(factcheck_id)
    hits = 0
    for ranked in rankings:
        relevant = gold_map.get(ranked.post_id)
        if not relevant:
            raise EvaluationError(
                f"post {ranked.post_id!r} has no gold fact-check"
            )
        if any(doc_id in relevant for doc_id, _ in ranked.hits[:k]):
            hits += 1
    return hits / len(rankings)


def evaluate(
    corpus: Corpus,
    rankings: list[RankedList],
    k: int,
    model_id: str = "",
    cross_rankings: list[RankedList] | None = None,
) -> EvalReport:
    """Assemble a report from same-language-track rankings plus an optional
    crosslingual-track ranking set."""
    if not rankings:
        raise EvaluationError("no rankings to evaluate")
    by_lang: dict[str, list[RankedList]] = {}
    for ranked in rankings:
        post = corpus.posts.get(ranked.post_id)
        if post is None:
            raise EvaluationError(f"ranked post {ranked.post_id!r} not in corpus")
        by_lang.setdefault(post.lang, []).append(ranked)
    per_lang = {
        lang: Cell(
            value=success_at_k(group, corpus.gold, k), n_posts=len(group)
        )
        for lang, group in by_lang.items()
    }
    total = sum(c.n_posts for c in per_lang.values())
    average = sum(c.value * c.n_posts for c in per_lang.values()) / total
    average_unweighted = sum(c.value for c in per_lang.values()) / len(per_lang)
    cross = None
    if cross_rankings is not None:
        if not cross_rankings:
            raise EvaluationError("crosslingual ranking set is empty")
        cross = Cell(
            value=success_at_k(cross_rankings, corpus.gold, k),
            n_posts=len(cross_rankings),
        )
    return EvalReport(
        model_id=model_id,
        k=k,
        per_lang=per_lang,
        crosslingual=cross,
        average=average,
        average_unweighted=average_unweighted,
    )


def write_report(report: EvalReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path: str | Path) -> EvalReport:
    with open(path, encoding="utf-8") as fh:
        try:
            return EvalReport.from_dict(json.load(fh))
        except json.JSONDecodeError as exc:
            raise EvaluationError(f"{path}: invalid JSON ({exc.msg})") from exc


def _column_order(reports: list[EvalReport]) -> list[str]:
    present = set()
    for report in reports:
        present |= set(report.per_lang)
    ordered = [lang for lang in PREFERRED_LANG_ORDER if lang in present]
    ordered += sorted(present - set(PREFERRED_LANG_ORDER))
    return ordered


def render_table(reports: list[EvalReport]) -> str:
    """Aligned text table: one model per row, language cells then
    Crosslingual and Average columns."""
    if not reports:
        raise EvaluationError("no reports to render")
    langs = _column_order(reports)
    headers = ["Model"] + langs + ["Crosslingual", "Average", "Average(unw)"]
    rows = []
    for report in reports:
        row = [report.model_id or "-"]
        for lang in langs:
            cell = report.per_lang.get(lang)
            row.append("-" if cell is None else f"{cell.value:.2f}")
        row.append(
            "-" if report.crosslingual is None else f"{report.crosslingual.value:.2f}"
        )
        row.append(f"{report.average:.2f}")
        row.append(f"{report.average_unweighted:.2f}")
        rows.append(row)
    widths = [
        max(len(headers[i]), *(len(r[i]) for r in rows)) for i in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)),
        "  ".join("-" * w for w in widths),
    ]
    for row in rows:
        lines.append("  ".join(v.ljust(widths[i]) for i, v in enumerate(row)))
    return "\n".join(lines) + "\n"


def _synthetic_langs(n_langs: int) -> list[str]:
    langs = list(PREFERRED_LANG_ORDER[:n_langs])
    langs += [f"l{i:02d}" for i in range(len(langs), n_langs)]
    return langs


def _random_rotation(rng: np.random.Generator, dim: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def make_synthetic(
    n_langs: int,
    posts_per_lang: int,
    distractors_per_lang: int,
    dim: int,
    noise: float,
    seed: int,
    rotate_lang: int | None = None,
) -> tuple[Corpus, EmbeddingMatrix, EmbeddingMatrix]:
    """Deterministic benchmark corpus with known retrieval geometry.

    Each gold pair shares a latent unit vector u; the post and fact-check
    embeddings are u plus isotropic Gaussian noise with expected norm
    `noise`, renormalized. Distractors are independent unit vectors. With
    `rotate_lang` set, that language's fact-check vectors (gold and
    distractors) are passed through one fixed random rotation, which
    misaligns them from the shared post space the way an unadapted encoder
    misaligns languages: recoverable only by learning the inverse map.
    """
    if n_langs < 1 or posts_per_lang < 1 or distractors_per_lang < 1:
        raise EvaluationError("all synthetic sizes must be >= 1")
    if dim < 8:
        raise EvaluationError("dim must be >= 8")
    if noise < 0:
        raise EvaluationError("noise must be >= 0")
    if rotate_lang is not None and not 0 <= rotate_lang < n_langs:
        raise EvaluationError(f"rotate_lang must be in [0, {n_langs - 1}]")
    langs = _synthetic_langs(n_langs)
    rng = np.random.default_rng(seed)
    rotation = _random_rotation(rng, dim) if rotate_lang is not None else None

    def unit(rows: np.ndarray) -> np.ndarray:
        return rows / np.linalg.norm(rows, axis=-1, keepdims=True)

    posts: dict[str, Document] = {}
    factchecks: dict[str, Document] = {}
    pairs = set()
    post_ids: list[str] = []
    post_rows = []
    fact_ids: list[str] = []
    fact_rows = []
    scale = noise / np.sqrt(dim)
    for lang_index, lang in enumerate(langs):
        latent = unit(rng.normal(size=(posts_per_lang, dim)))
        q = unit(latent + rng.normal(size=(posts_per_lang, dim)) * scale)
        p = unit(latent + rng.normal(size=(posts_per_lang, dim)) * scale)
        d = unit(rng.normal(size=(distractors_per_lang, dim)))
        if rotation is not None and lang_index == rotate_lang:
            p = p @ rotation.T
            d = d @ rotation.T
        for i in range(posts_per_lang):
            post_id = f"{lang}-post-{i:05d}"
            fact_id = f"{lang}-fact-{i:05d}"
            text = f"synthetic claim {lang} {i}"
            posts[post_id] = Document(
                id=post_id, kind=POST, lang=lang, text_original=text,
                text_english=text,
            )
            factchecks[fact_id] = Document(
                id=fact_id, kind=FACTCHECK, lang=lang,
                text_original=f"synthetic fact-check {lang} {i}",
                text_english=f"synthetic fact-check {lang} {i}",
            )
            pairs.add((post_id, fact_id))
            post_ids.append(post_id)
            fact_ids.append(fact_id)
        post_rows.append(q)
        fact_rows.append(p)
        for i in range(distractors_per_lang):
            dist_id = f"{lang}-dist-{i:05d}"
            factchecks[dist_id] = Document(
                id=dist_id, kind=FACTCHECK, lang=lang,
                text_original=f"synthetic distractor {lang} {i}",
                text_english=f"synthetic distractor {lang} {i}",
            )
            fact_ids.append(dist_id)
        fact_rows.append(d)
    corpus = Corpus(
        posts=posts, factchecks=factchecks, gold=GoldPairs(frozenset(pairs))
    )
    post_matrix = EmbeddingMatrix(
        model_id="synthetic", channel=ORIGINAL, kind=POST,
        ids=post_ids, vectors=np.vstack(post_rows).astype(np.float32),
    )
    fact_matrix = EmbeddingMatrix(
        model_id="synthetic", channel=ORIGINAL, kind=FACTCHECK,
        ids=fact_ids, vectors=np.vstack(fact_rows).astype(np.float32),
    )
    return corpus, post_matrix, fact_matrix
