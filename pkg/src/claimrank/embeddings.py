"""Embedding matrices and the EMBX interchange format.

EMBX is a little-endian binary layout:

    magic "EMBX" | u16 version=1 | u8 channel | u8 kind
    u16 model_id length | model_id UTF-8
    u32 dim | u64 row count n
    n records of: u16 id length | id UTF-8 | dim x f32

Channel codes: 0=original, 1=english. Kind codes: 0=post, 1=factcheck.
Rows are stored unit-normalized so retrieval can use plain dot products;
the importer renormalizes rows whose norm drifts beyond NORM_TOLERANCE and
refuses NaN/Inf outright.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import CHANNELS, KINDS
from .errors import EmbeddingFormatError

MAGIC = b"EMBX"
VERSION = 1
NORM_TOLERANCE = 1e-4

_CHANNEL_CODE = {name: i for i, name in enumerate(CHANNELS)}
_KIND_CODE = {name: i for i, name in enumerate(KINDS)}
_CHANNEL_NAME = {i: name for name, i in _CHANNEL_CODE.items()}
_KIND_NAME = {i: name for name, i in _KIND_CODE.items()}


@dataclass
class EmbeddingMatrix:
    """One model's unit-normalized vectors over a document set.

    `vectors` is an (n, dim) float32 array; row i belongs to `ids[i]`.
    `renormalized` counts rows the importer had to rescale.
    """

    model_id: str
    channel: str
    kind: str
    ids: list[str]
    vectors: np.ndarray
    renormalized: int = 0
    _index: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if self.channel not in CHANNELS:
            raise EmbeddingFormatError(f"unknown channel {self.channel!r}")
        if self.kind not in KINDS:
            raise EmbeddingFormatError(f"unknown kind {self.kind!r}")
        vectors = np.asarray(self.vectors, dtype=np.float32)
        if vectors.ndim != 2:
            raise EmbeddingFormatError("vectors must be a 2-D array")
        if vectors.shape[0] != len(self.ids):
            raise EmbeddingFormatError(
                f"{len(self.ids)} ids but {vectors.shape[0]} vector rows"
            )
        if vectors.shape[1] < 1:
            raise EmbeddingFormatError("dim must be positive")
        if not np.all(np.isfinite(vectors)):
            raise EmbeddingFormatError("vectors contain NaN or Inf")
        self.vectors = vectors
        self._index = {}
        for row, doc_id in enumerate(self.ids):
            if not doc_id:
                raise EmbeddingFormatError("empty document id")
            if doc_id in self._index:
                raise EmbeddingFormatError(f"duplicate id {doc_id!r}")
            self._index[doc_id] = row

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._index

    def row_of(self, doc_id: str) -> int:
        try:
            return self._index[doc_id]
        except KeyError:
            raise EmbeddingFormatError(f"unknown document id {doc_id!r}") from None

    def vector(self, doc_id: str) -> np.ndarray:
        """The stored normalized row for `doc_id` (unknown id is an error)."""
        return self.vectors[self.row_of(doc_id)]


def normalize_rows(
    matrix: EmbeddingMatrix, tolerance: float = NORM_TOLERANCE
) -> EmbeddingMatrix:
    """Renormalize rows whose L2 norm deviates from 1 by more than `tolerance`.

    Rows within tolerance keep their exact float32 bytes, so a compliant
    matrix round-trips bit-exactly. A zero-norm row is a hard error.
    """
    norms = np.linalg.norm(matrix.vectors.astype(np.float64), axis=1)
    bad = np.abs(norms - 1.0) > tolerance
    count = int(bad.sum())
    if count == 0:
        matrix.renormalized = 0
        return matrix
    if np.any(norms[bad] < 1e-12):
        row = int(np.where(bad & (norms < 1e-12))[0][0])
        raise EmbeddingFormatError(
            f"row {row} (id {matrix.ids[row]!r}) has zero norm"
        )
    vectors = matrix.vectors.copy()
    fixed = matrix.vectors[bad].astype(np.float64)
    vectors[bad] = (fixed / norms[bad][:, None]).astype(np.float32)
    return EmbeddingMatrix(
        model_id=matrix.model_id,
        channel=matrix.channel,
        kind=matrix.kind,
        ids=matrix.ids,
        vectors=vectors,
        renormalized=count,
    )


def write_matrix(matrix: EmbeddingMatrix, path: str | Path) -> None:
    """Serialize to EMBX. Row order is preserved exactly."""
    model_bytes = matrix.model_id.encode("utf-8")
    if len(model_bytes) > 0xFFFF:
        raise EmbeddingFormatError("model_id longer than 65535 bytes")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(
            struct.pack(
                "<HBB",
                VERSION,
                _CHANNEL_CODE[matrix.channel],
                _KIND_CODE[matrix.kind],
            )
        )
        fh.write(struct.pack("<H", len(model_bytes)))
        fh.write(model_bytes)
        fh.write(struct.pack("<IQ", matrix.dim, len(matrix)))
        for row, doc_id in enumerate(matrix.ids):
            id_bytes = doc_id.encode("utf-8")
            if len(id_bytes) > 0xFFFF:
                raise EmbeddingFormatError(f"id {doc_id!r} longer than 65535 bytes")
            fh.write(struct.pack("<H", len(id_bytes)))
            fh.write(id_bytes)
            fh.write(matrix.vectors[row].astype("<f4").tobytes())


class _Reader:
    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise EmbeddingFormatError(f"{self.path}: truncated payload")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def read_matrix(path: str | Path) -> EmbeddingMatrix:
    """Parse and validate an EMBX file.

    Out-of-tolerance rows are renormalized and counted in `renormalized`;
    NaN/Inf, duplicate ids, truncation, and trailing bytes are hard errors.
    """
    with open(path, "rb") as fh:
        reader = _Reader(fh.read(), path)
    if reader.take(4) != MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic (not an EMBX file)")
    version, channel_code, kind_code = reader.unpack("<HBB")
    if version != VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    if channel_code not in _CHANNEL_NAME:
        raise EmbeddingFormatError(f"{path}: unknown channel code {channel_code}")
    if kind_code not in _KIND_NAME:
        raise EmbeddingFormatError(f"{path}: unknown kind code {kind_code}")
    (model_len,) = reader.unpack("<H")
    model_id = reader.take(model_len).decode("utf-8")
    dim, count = reader.unpack("<IQ")
    if dim < 1:
        raise EmbeddingFormatError(f"{path}: dim must be positive")
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    for row in range(count):
        (id_len,) = reader.unpack("<H")
        ids.append(reader.take(id_len).decode("utf-8"))
        rows[row] = np.frombuffer(reader.take(4 * dim), dtype="<f4")
    if reader.pos != len(reader.data):
        raise EmbeddingFormatError(f"{path}: trailing bytes after last record")
    try:
        matrix = EmbeddingMatrix(
            model_id=model_id,
            channel=_CHANNEL_NAME[channel_code],
            kind=_KIND_NAME[kind_code],
            ids=ids,
            vectors=rows,
        )
        return normalize_rows(matrix)
    except EmbeddingFormatError as exc:
        raise EmbeddingFormatError(f"{path}: {exc}") from exc


class ModelRegistry:
    """In-memory map of (model_id, channel, kind) -> EmbeddingMatrix.

    A triple can be registered once; conflicting re-registration is an error.
    """

    def __init__(self) -> None:
        self._entries: dict[tuple[str, str, str], EmbeddingMatrix] = {}

    def register(self, matrix: EmbeddingMatrix) -> None:
        key = (matrix.model_id, matrix.channel, matrix.kind)
        if key in self._entries:
            raise EmbeddingFormatError(
                f"matrix already registered for model={key[0]!r} "
                f"channel={key[1]} kind={key[2]}"
            )
        self._entries[key] = matrix

    def get(self, model_id: str, channel: str, kind: str) -> EmbeddingMatrix:
        try:
            return self._entries[(model_id, channel, kind)]
        except KeyError:
            raise EmbeddingFormatError(
                f"no matrix registered for model={model_id!r} "
                f"channel={channel} kind={kind}"
            ) from None

    def __len__(self) -> int:
        return len(self._entries)
