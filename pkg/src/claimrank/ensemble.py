"""Weighted score fusion across models.

Each model's candidates contribute confidence x per-language weight; the
fused ranking is the candidates ordered by summed contribution. Candidates
missing from a model's list contribute nothing for that model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import FusionError
from .retrieval import RankedList

CONF_SIMILARITY = "similarity"
CONF_RANK = "rank"
CONFIDENCE_KINDS = (CONF_SIMILARITY, CONF_RANK)


@dataclass(frozen=True)
class ModelProfile:
    """Per-language quality weights for one model (typically dev S@K)."""

    model_id: str
    lang_weights: dict[str, float] = field(default_factory=dict)
    default_weight: float = 1.0

    def __post_init__(self) -> None:
        for lang, weight in self.lang_weights.items():
            if not 0.0 <= weight <= 1.0:
                raise FusionError(
                    f"profile {self.model_id!r}: weight for {lang!r} "
                    f"outside [0, 1]: {weight}"
                )
        if not 0.0 <= self.default_weight <= 1.0:
            raise FusionError(
                f"profile {self.model_id!r}: default weight outside [0, 1]"
            )

    def weight_for(self, lang: str) -> float:
        return self.lang_weights.get(lang, self.default_weight)


@dataclass(frozen=True)
class FusionConfig:
    confidence: str = CONF_SIMILARITY
    k_out: int = 10

    def __post_init__(self) -> None:
        if self.confidence not in CONFIDENCE_KINDS:
            raise FusionError(f"unknown confidence kind {self.confidence!r}")
        if self.k_out < 1:
            raise FusionError("k_out must be >= 1")


def _confidence(hits, kind: str) -> dict[str, float]:
    if kind == CONF_SIMILARITY:
        return {doc_id: score for doc_id, score in hits}
    # rank-linear: 1 for the first hit, down to 1/K for the last
    k = len(hits)
    return {doc_id: (k - rank) / k for rank, (doc_id, _) in enumerate(hits)}


def fuse(
    rankings: dict[str, RankedList],
    profiles: dict[str, ModelProfile],
    post_lang: str,
    cfg: FusionConfig,
    pool_k: int | None = None,
) -> RankedList:
    """Fuse one post's per-model rankings into a single top-k_out list.

    `pool_k` truncates each model's list before scoring (None keeps all).
    Ties in the summed score break by ascending fact-check id.
    """
    if not rankings:
        raise FusionError("no rankings to fuse")
    post_ids = {r.post_id for r in rankings.values()}
    if len(post_ids) != 1:
        raise FusionError(f"rankings disagree on the post: {sorted(post_ids)}")
    totals: dict[str, float] = {}
    for model_id, ranked in rankings.items():
        profile = profiles.get(model_id)
        if profile is None:
            raise FusionError(f"no profile for model {model_id!r}")
        weight = profile.weight_for(post_lang)
        if weight == 0.0:
            # a zero-weight model contributes neither scores nor candidates,
            # so fusing with it is identical to fusing without it
            continue
        hits = ranked.hits[:pool_k] if pool_k is not None else ranked.hits
        for doc_id, conf in _confidence(hits, cfg.confidence).items():
            totals[doc_id] = totals.get(doc_id, 0.0) + conf * weight
    ordered = sorted(totals.items(), key=lambda item: (-item[1], item[0]))
    return RankedList(post_id=post_ids.pop(), hits=tuple(ordered[: cfg.k_out]))


def build_profiles(eval_reports: list) -> list[ModelProfile]:
    """Turn per-model evaluation reports into fusion profiles.

    A model's weight for a language is its S@K there; the default weight is
    its average S@K. Reports must have been computed on a split disjoint from
    the fusion evaluation split.
    """
    profiles = []
    for report in eval_reports:
        per_lang = getattr(report, "per_lang", None)
        average = getattr(report, "average", None)
        if per_lang is None or average is None:
            raise FusionError(
                f"report for {getattr(report, 'model_id', '?')!r} lacks S@K cells"
            )
        profiles.append(
            ModelProfile(
                model_id=report.model_id,
                lang_weights={lang: cell.value for lang, cell in per_lang.items()},
                default_weight=average,
            )
        )
    return profiles


def write_profiles(profiles: list[ModelProfile], path: str | Path) -> None:
    payload = {
        p.model_id: {**p.lang_weights, "default": p.default_weight}
        for p in profiles
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, indent=2, sort_keys=True)
        fh.write("\n")


def read_profiles(path: str | Path) -> dict[str, ModelProfile]:
    with open(path, encoding="utf-8") as fh:
        try:
            payload = json.load(fh)
        except json.JSONDecodeError as exc:
            raise FusionError(f"{path}: invalid JSON ({exc.msg})") from exc
    if not isinstance(payload, dict):
        raise FusionError(f"{path}: expected an object of model profiles")
    profiles = {}
    for model_id, weights in payload.items():
        if not isinstance(weights, dict):
            raise FusionError(f"{path}: profile for {model_id!r} must be an object")
        default = weights.get("default", 1.0)
        langs = {k: float(v) for k, v in weights.items() if k != "default"}
        profiles[model_id] = ModelProfile(
            model_id=model_id, lang_weights=langs, default_weight=float(default)
        )
    return profiles
