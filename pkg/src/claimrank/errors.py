"""Exception hierarchy. Everything raised on bad data derives from DataError,
which the CLI maps to exit code 2."""


class DataError(Exception):
    """Base class for invalid input data or files."""


class CorpusError(DataError):
    """Malformed corpus files or referential-integrity violations."""


class EmbeddingFormatError(DataError):
    """Invalid EMBX/ADPT payloads or matrix contents."""


class RetrievalError(DataError):
    """Unsatisfiable retrieval request (empty pool, missing embedding)."""


class TrainingError(DataError):
    """Invalid training configuration or a degenerate training state."""


class FusionError(DataError):
    """Inconsistent fusion inputs."""


class EvaluationError(DataError):
    """Unsatisfiable evaluation request."""
