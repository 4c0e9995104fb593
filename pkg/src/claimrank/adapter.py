"""Linear adapter over frozen embeddings, trained with the in-batch
multiple-negatives ranking loss.

The adapter is a square matrix W applied to stored vectors as
a(x) = Wx / ||Wx||. Which side of the similarity it adapts is configurable:

* ``query``    adapts post vectors only,
* ``passage``  adapts fact-check vectors only (trainer default),
* ``both``     adapts the two sides with the same W.

``passage`` is the default because cosine similarity is invariant under any
orthogonal map applied to both sides, so a symmetric adapter can never move
one embedding space onto another; one-sided adaptation can, which is the
whole point of training it.

On an N-pair batch the loss treats pair i's fact-check as the correct class
among the batch's N fact-checks:

    logits[i][j] = scale * cos(a(q_i), a(p_j))
    loss = -(1/N) * sum_i log softmax(logits[i])[i]

All arithmetic is float64; training is single-threaded and deterministic
given the seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Corpus
from .embeddings import EmbeddingMatrix
from .errors import EmbeddingFormatError, TrainingError

ADAPT_QUERY = "query"
ADAPT_PASSAGE = "passage"
ADAPT_BOTH = "both"
ADAPT_SIDES = (ADAPT_QUERY, ADAPT_PASSAGE, ADAPT_BOTH)

ADPT_MAGIC = b"ADPT"
ADPT_VERSION = 1

_MIN_NORM = 1e-12

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class AdapterModel:
    model_id: str
    weights: np.ndarray  # (dim, dim) float64

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 2 or weights.shape[0] != weights.shape[1]:
            raise TrainingError("adapter weights must be a square matrix")
        if not np.all(np.isfinite(weights)):
            raise TrainingError("adapter weights contain NaN or Inf")
        self.weights = weights

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    @classmethod
    def identity(cls, model_id: str, dim: int) -> "AdapterModel":
        return cls(model_id=model_id, weights=np.eye(dim))


@dataclass(frozen=True)
class TrainingBatch:
    """Paired unit-norm query and positive embeddings; row i of P is a gold
    fact-check for row i of Q."""

    Q: np.ndarray
    P: np.ndarray

    def __post_init__(self) -> None:
        Q = np.asarray(self.Q, dtype=np.float64)
        P = np.asarray(self.P, dtype=np.float64)
        if Q.ndim != 2 or P.shape != Q.shape:
            raise TrainingError("Q and P must be 2-D arrays of the same shape")
        if Q.shape[0] < 1:
            raise TrainingError("batch must contain at least one pair")
        for name, arr in (("Q", Q), ("P", P)):
            norms = np.linalg.norm(arr, axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-3):
                raise TrainingError(f"{name} rows must be unit-norm")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "P", P)

    @property
    def size(self) -> int:
        return int(self.Q.shape[0])


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 16
    learning_rate: float = 2e-5
    epochs: int = 3
    warmup_steps: int = 100
    scale: float = 20.0
    seed: int = 0
    adapt_side: str = ADAPT_PASSAGE

    def __post_init__(self) -> None:
        if not 2 <= self.batch_size <= 16:
            raise TrainingError("batch_size must be in [2, 16]")
        # The encoder-scale range would be [1e-5, 3e-5]; a 0 rate (no-op) and
        # larger rates are legal because the adapter has ~dim^2 parameters,
        # not a transformer's millions.
        if not 0.0 <= self.learning_rate < 1.0:
            raise TrainingError("learning_rate must be in [0, 1)")
        if not 1 <= self.epochs <= 3:
            raise TrainingError("epochs must be in [1, 3]")
        if self.warmup_steps < 0:
            raise TrainingError("warmup_steps must be >= 0")
        if self.scale <= 0.0:
            raise TrainingError("scale must be positive")
        if self.adapt_side not in ADAPT_SIDES:
            raise TrainingError(f"unknown adapt_side {self.adapt_side!r}")


def _adapted(X: np.ndarray, W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    U = X @ W.T
    norms = np.linalg.norm(U, axis=1, keepdims=True)
    if np.any(norms < _MIN_NORM):
        raise TrainingError("degenerate adapter: ||W x|| below 1e-12")
    return U / norms, norms


def _forward(batch: TrainingBatch, W: np.ndarray, scale: float, adapt: str):
    if adapt not in ADAPT_SIDES:
        raise TrainingError(f"unknown adapt_side {adapt!r}")
    if adapt in (ADAPT_QUERY, ADAPT_BOTH):
        A, nu = _adapted(batch.Q, W)
    else:
        A, nu = batch.Q, None
    if adapt in (ADAPT_PASSAGE, ADAPT_BOTH):
        B, nv = _adapted(batch.P, W)
    else:
        B, nv = batch.P, None
    logits = scale * (A @ B.T)
    shift = logits.max(axis=1, keepdims=True)
    exp = np.exp(logits - shift)
    denom = exp.sum(axis=1, keepdims=True)
    loss = float(
        np.mean(np.log(denom[:, 0]) + shift[:, 0] - np.diagonal(logits))
    )
    softmax = exp / denom
    return loss, logits, softmax, A, B, nu, nv


def mnrl_loss(
    batch: TrainingBatch,
    W: np.ndarray,
    scale: float = 20.0,
    adapt: str = ADAPT_BOTH,
) -> tuple[float, np.ndarray]:
    """Batch loss and the scaled logit matrix.

    Exact anchors: a single pair gives loss 0; identical logits everywhere
    give loss ln N.
    """
    loss, logits, *_ = _forward(batch, np.asarray(W, dtype=np.float64), scale, adapt)
    return loss, logits


def mnrl_grad(
    batch: TrainingBatch,
    W: np.ndarray,
    scale: float = 20.0,
    adapt: str = ADAPT_BOTH,
) -> np.ndarray:
    """Analytic d(loss)/dW, chained through the row normalization
    x -> x/||x|| whose Jacobian is (I - x̂ x̂ᵀ)/||x||."""
    W = np.asarray(W, dtype=np.float64)
    _, _, softmax, A, B, nu, nv = _forward(batch, W, scale, adapt)
    n = batch.size
    G = (softmax - np.eye(n)) / n
    grad = np.zeros_like(W)
    if nu is not None:  # query side adapted
        dA = scale * (G @ B)
        dU = (dA - (dA * A).sum(axis=1, keepdims=True) * A) / nu
        grad += dU.T @ batch.Q
    if nv is not None:  # passage side adapted
        dB = scale * (G.T @ A)
        dV = (dB - (dB * B).sum(axis=1, keepdims=True) * B) / nv
        grad += dV.T @ batch.P
    return grad


def _gold_pairs_as_arrays(
    corpus: Corpus,
    posts: EmbeddingMatrix,
    factchecks: EmbeddingMatrix,
    langs: set[str] | None,
) -> tuple[np.ndarray, np.ndarray]:
    pairs = sorted(corpus.gold.pairs)
    if langs is not None:
        pairs = [(p, f) for p, f in pairs if corpus.posts[p].lang in langs]
    if len(pairs) < 2:
        raise TrainingError(f"need at least 2 gold pairs to train, got {len(pairs)}")
    for post_id, factcheck_id in pairs:
        if post_id not in posts:
            raise TrainingError(f"gold post {post_id!r} has no embedding")
        if factcheck_id not in factchecks:
            raise TrainingError(f"gold fact-check {factcheck_id!r} has no embedding")
    Q = np.stack([posts.vector(p).astype(np.float64) for p, _ in pairs])
    P = np.stack([factchecks.vector(f).astype(np.float64) for _, f in pairs])
    return Q, P


def train(
    corpus: Corpus,
    posts: EmbeddingMatrix,
    factchecks: EmbeddingMatrix,
    cfg: TrainConfig,
    langs: set[str] | None = None,
) -> tuple[AdapterModel, list[float]]:
    """Train an adapter on the corpus gold pairs; returns it with the
    per-step loss history.

    Pairs are reshuffled every epoch from one seeded generator; a final short
    batch is kept if it still holds >= 2 pairs. The optimizer is Adam with
    linear warmup to the configured rate, then a constant rate.
    """
    if posts.model_id != factchecks.model_id:
        raise TrainingError(
            f"post and fact-check matrices come from different models "
            f"({posts.model_id!r} vs {factchecks.model_id!r})"
        )
    if posts.dim != factchecks.dim:
        raise TrainingError("post and fact-check embedding dims differ")
    Q, P = _gold_pairs_as_arrays(corpus, posts, factchecks, langs)
    n, dim = Q.shape
    rng = np.random.default_rng(cfg.seed)
    W = np.eye(dim)
    m = np.zeros_like(W)
    v = np.zeros_like(W)
    losses: list[float] = []
    step = 0
    for _ in range(cfg.epochs):
        perm = rng.permutation(n)
        for start in range(0, n, cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            if len(idx) < 2:
                continue
            step += 1
            batch = TrainingBatch(Q=Q[idx], P=P[idx])
            loss = mnrl_loss(batch, W, cfg.scale, cfg.adapt_side)[0]
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss at step {step}")
            losses.append(loss)
            grad = mnrl_grad(batch, W, cfg.scale, cfg.adapt_side)
            if cfg.warmup_steps > 0:
                lr = cfg.learning_rate * min(1.0, step / cfg.warmup_steps)
            else:
                lr = cfg.learning_rate
            m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
            v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
            m_hat = m / (1.0 - ADAM_BETA1**step)
            v_hat = v / (1.0 - ADAM_BETA2**step)
            W = W - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
            if not np.all(np.isfinite(W)):
                raise TrainingError(f"non-finite adapter weights at step {step}")
    return AdapterModel(model_id=posts.model_id, weights=W), losses


def apply_adapter(adapter: AdapterModel, matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Map every row through W and renormalize; the result carries the
    model id ``<base>+adapter``."""
    if adapter.dim != matrix.dim:
        raise TrainingError(
            f"adapter dim {adapter.dim} does not match matrix dim {matrix.dim}"
        )
    rows = matrix.vectors.astype(np.float64) @ adapter.weights.T
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    if np.any(norms < _MIN_NORM):
        raise TrainingError("degenerate adapter: an output row has zero norm")
    return EmbeddingMatrix(
        model_id=matrix.model_id + "+adapter",
        channel=matrix.channel,
        kind=matrix.kind,
        ids=list(matrix.ids),
        vectors=(rows / norms).astype(np.float32),
    )


def write_adapter(adapter: AdapterModel, path: str | Path) -> None:
    model_bytes = adapter.model_id.encode("utf-8")
    if len(model_bytes) > 0xFFFF:
        raise EmbeddingFormatError("model_id longer than 65535 bytes")
    with open(path, "wb") as fh:
        fh.write(ADPT_MAGIC)
        fh.write(struct.pack("<H", ADPT_VERSION))
        fh.write(struct.pack("<H", len(model_bytes)))
        fh.write(model_bytes)
        fh.write(struct.pack("<I", adapter.dim))
        fh.write(adapter.weights.astype("<f8").tobytes(order="C"))


def read_adapter(path: str | Path) -> AdapterModel:
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def take(n: int) -> bytes:
        nonlocal pos
        if pos + n > len(data):
            raise EmbeddingFormatError(f"{path}: truncated payload")
        chunk = data[pos : pos + n]
        pos += n
        return chunk

    if take(4) != ADPT_MAGIC:
        raise EmbeddingFormatError(f"{path}: bad magic (not an ADPT file)")
    (version,) = struct.unpack("<H", take(2))
    if version != ADPT_VERSION:
        raise EmbeddingFormatError(f"{path}: unsupported version {version}")
    (model_len,) = struct.unpack("<H", take(2))
    model_id = take(model_len).decode("utf-8")
    (dim,) = struct.unpack("<I", take(4))
    if dim < 1:
        raise EmbeddingFormatError(f"{path}: dim must be positive")
    weights = np.frombuffer(take(8 * dim * dim), dtype="<f8").reshape(dim, dim)
    if pos != len(data):
        raise EmbeddingFormatError(f"{path}: trailing bytes after weights")
    try:
        return AdapterModel(model_id=model_id, weights=weights.copy())
    except TrainingError as exc:
        raise EmbeddingFormatError(f"{path}: {exc}") from exc
