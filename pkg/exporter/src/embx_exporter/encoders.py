"""Text encoders behind a single `encode(texts) -> float32 rows` interface.

Two backends:

* ``hash:<dim>`` — a dependency-free feature-hashing encoder (token and
  character-trigram hashes with signs). Deterministic across processes and
  platforms; meant for tests, CI, and offline pipeline runs.
* anything else — a sentence-transformers model name or local path,
  loaded lazily so the heavy dependency stays optional.

All encoders return unit-normalized float32 rows.
"""

from __future__ import annotations

import hashlib

import numpy as np

from .embx import ExportError


def _normalize(rows: np.ndarray) -> np.ndarray:
    rows = rows.astype(np.float64)
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms < 1e-12):
        raise ExportError("encoder produced a zero vector")
    return (rows / norms).astype(np.float32)


class HashingEncoder:
    """Feature hashing into `dim` signed buckets, then L2 normalization."""

    def __init__(self, dim: int) -> None:
        if dim < 8:
            raise ExportError("hash encoder needs dim >= 8")
        self.dim = dim

    def _features(self, text: str):
        tokens = text.split()
        for token in tokens:
            yield "t:" + token
        padded = f" {text} "
        for i in range(len(padded) - 2):
            yield "g:" + padded[i : i + 3]

    def encode(self, texts: list[str]) -> np.ndarray:
        rows = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for feature in self._features(text):
                digest = hashlib.sha256(feature.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:8], "little") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                rows[row, bucket] += sign
            if not rows[row].any():
                # all-zero only when the text has no features at all
                raise ExportError("cannot encode empty text")
        return _normalize(rows)


class SentenceTransformerEncoder:
    """Inference-only wrapper over a sentence-transformers model."""

    def __init__(self, model_name: str, batch_size: int = 32) -> None:
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ExportError(
                f"sentence-transformers is not installed; cannot load "
                f"{model_name!r} (install embx-exporter[encoders])"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise ExportError(f"cannot load model {model_name!r}: {exc}") from exc
        self.batch_size = batch_size
        probe = self._model.encode(["probe"], convert_to_numpy=True)
        self.dim = int(probe.shape[1])

    def encode(self, texts: list[str]) -> np.ndarray:
        if any(not text.strip() for text in texts):
            raise ExportError("cannot encode empty text")
        rows = self._model.encode(
            texts,
            batch_size=self.batch_size,
            convert_to_numpy=True,
            show_progress_bar=False,
        )
        rows = np.asarray(rows)
        if not np.all(np.isfinite(rows)):
            raise ExportError("encoder produced NaN/Inf")
        return _normalize(rows)


def load_encoder(model: str, batch_size: int = 32):
    if model.startswith("hash:"):
        try:
            dim = int(model.split(":", 1)[1])
        except ValueError:
            raise ExportError(f"bad hash encoder dimension in {model!r}") from None
        return HashingEncoder(dim)
    return SentenceTransformerEncoder(model, batch_size=batch_size)
