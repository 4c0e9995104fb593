"""Writer for the EMBX interchange format.

Little-endian layout:

    magic "EMBX" | u16 version=1 | u8 channel (0=original, 1=english)
    u8 kind (0=post, 1=factcheck) | u16 model_id length | model_id UTF-8
    u32 dim | u64 row count | rows of [u16 id length, id UTF-8, dim x f32]

Rows must be unit-normalized float32; the consumer validates norms to 1e-4
and rejects NaN/Inf, so this writer checks the same invariants up front.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"EMBX"
VERSION = 1
CHANNEL_CODES = {"original": 0, "english": 1}
KIND_CODES = {"post": 0, "factcheck": 1}


class ExportError(Exception):
    pass


def write_embx(
    path: str | Path,
    model_id: str,
    channel: str,
    kind: str,
    ids: list[str],
    vectors: np.ndarray,
) -> None:
    if channel not in CHANNEL_CODES:
        raise ExportError(f"unknown channel {channel!r}")
    if kind not in KIND_CODES:
        raise ExportError(f"unknown kind {kind!r}")
    vectors = np.asarray(vectors, dtype=np.float32)
    if vectors.ndim != 2 or vectors.shape[0] != len(ids):
        raise ExportError("vectors must be one float32 row per id")
    if not np.all(np.isfinite(vectors)):
        raise ExportError("refusing to write NaN/Inf vectors")
    norms = np.linalg.norm(vectors.astype(np.float64), axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-4):
        worst = int(np.argmax(np.abs(norms - 1.0)))
        raise ExportError(
            f"row for {ids[worst]!r} is not unit-norm ({norms[worst]:.6f})"
        )
    model_bytes = model_id.encode("utf-8")
    if len(model_bytes) > 0xFFFF:
        raise ExportError("model_id longer than 65535 bytes")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<HBB", VERSION, CHANNEL_CODES[channel], KIND_CODES[kind]))
        fh.write(struct.pack("<H", len(model_bytes)))
        fh.write(model_bytes)
        fh.write(struct.pack("<IQ", vectors.shape[1], len(ids)))
        for row, doc_id in enumerate(ids):
            id_bytes = doc_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise ExportError(f"id {doc_id!r} longer than 65535 bytes")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(vectors[row].astype("<f4").tobytes())
