"""Batch export: prepared corpus JSONL in, EMBX out.

The input is the pipeline's prepared file: one object per document with
`id`, `kind`, `lang`, and the cleaned `combined_original` /
`combined_english` fields. One export covers one (kind, channel) slice.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .embx import CHANNEL_CODES, ExportError, KIND_CODES, write_embx
from .encoders import load_encoder

_CHANNEL_FIELD = {"original": "combined_original", "english": "combined_english"}

# Deterministic stand-in for documents whose cleaned text is empty, used
# only with empty_text="placeholder": the first basis vector.
PLACEHOLDER_NOTE = "first basis vector e0"


@dataclass(frozen=True)
class ExportJob:
    model: str
    input_path: str
    channel: str
    kind: str
    out_path: str
    batch_size: int = 32
    query_prefix: str = ""
    passage_prefix: str = ""
    empty_text: str = "error"  # or "placeholder"
    expect_dim: int | None = None

    def __post_init__(self) -> None:
        if self.channel not in CHANNEL_CODES:
            raise ExportError(f"unknown channel {self.channel!r}")
        if self.kind not in KIND_CODES:
            raise ExportError(f"unknown kind {self.kind!r}")
        if self.batch_size < 1:
            raise ExportError("batch_size must be >= 1")
        if self.empty_text not in ("error", "placeholder"):
            raise ExportError(f"unknown empty_text policy {self.empty_text!r}")

    @property
    def model_id(self) -> str:
        """Model string plus any prefix conventions, recorded verbatim so a
        matrix is never mistaken for a differently-prompted export."""
        model_id = self.model
        if self.query_prefix:
            model_id += f"|query_prefix={self.query_prefix}"
        if self.passage_prefix:
            model_id += f"|passage_prefix={self.passage_prefix}"
        return model_id


def read_prepared(path: str | Path, kind: str, channel: str) -> list[tuple[str, str]]:
    field = _CHANNEL_FIELD[channel]
    rows: list[tuple[str, str]] = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ExportError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if obj.get("kind") != kind:
                continue
            doc_id = obj.get("id")
            if not doc_id:
                raise ExportError(f"{path}:{lineno}: missing id")
            if doc_id in seen:
                raise ExportError(f"{path}:{lineno}: duplicate id {doc_id!r}")
            seen.add(doc_id)
            if field not in obj:
                raise ExportError(
                    f"{path}:{lineno}: document {doc_id!r} has no {field!r} field"
                )
            rows.append((doc_id, obj[field] or ""))
    if not rows:
        raise ExportError(f"{path}: no {kind} documents to export")
    return rows


def export(job: ExportJob) -> int:
    """Run one export job; returns the number of rows written."""
    encoder = load_encoder(job.model, batch_size=job.batch_size)
    documents = read_prepared(job.input_path, job.kind, job.channel)
    prefix = job.query_prefix if job.kind == "post" else job.passage_prefix

    ids: list[str] = []
    empty_rows: list[int] = []
    texts: list[str] = []
    for doc_id, text in documents:
        ids.append(doc_id)
        if not text.strip():
            if job.empty_text == "error":
                raise ExportError(
                    f"document {doc_id!r} has empty text; re-run with "
                    f"--empty-text placeholder to embed a fixed stand-in"
                )
            empty_rows.append(len(texts))
            texts.append("placeholder")  # replaced after encoding
        else:
            texts.append(prefix + text)

    vectors = np.empty((0, 0), dtype=np.float32)
    for start in range(0, len(texts), job.batch_size):
        batch = encoder.encode(texts[start : start + job.batch_size])
        if vectors.size == 0:
            vectors = np.empty((len(texts), batch.shape[1]), dtype=np.float32)
        vectors[start : start + batch.shape[0]] = batch
    if empty_rows:
        placeholder = np.zeros(vectors.shape[1], dtype=np.float32)
        placeholder[0] = 1.0  # see PLACEHOLDER_NOTE
        vectors[empty_rows] = placeholder
    if job.expect_dim is not None and vectors.shape[1] != job.expect_dim:
        raise ExportError(
            f"encoder produced dim {vectors.shape[1]}, expected {job.expect_dim} "
            f"(a prior export of {job.model_id!r} disagrees)"
        )
    write_embx(job.out_path, job.model_id, job.channel, job.kind, ids, vectors)
    return len(ids)
