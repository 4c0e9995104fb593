"""Dense retrieval and evaluation pipeline for previously fact-checked
claim matching."""

__version__ = "0.1.0"

from .corpus import Corpus, Document, GoldPairs, load_corpus, save_corpus, split_by_language
from .embeddings import EmbeddingMatrix, ModelRegistry, read_matrix, write_matrix
from .retrieval import RankedList, RetrievalConfig, Retriever, top_k
from .adapter import AdapterModel, TrainConfig, TrainingBatch, apply_adapter, mnrl_grad, mnrl_loss, train
from .ensemble import FusionConfig, ModelProfile, build_profiles, fuse
from .evaluation import EvalReport, evaluate, make_synthetic, success_at_k
from .textprep import CleaningConfig, clean_text, combine_post

__all__ = [
    "AdapterModel",
    "CleaningConfig",
    "Corpus",
    "Document",
    "EmbeddingMatrix",
    "EvalReport",
    "FusionConfig",
    "GoldPairs",
    "ModelProfile",
    "ModelRegistry",
    "RankedList",
    "RetrievalConfig",
    "Retriever",
    "TrainConfig",
    "TrainingBatch",
    "apply_adapter",
    "build_profiles",
    "clean_text",
    "combine_post",
    "evaluate",
    "fuse",
    "load_corpus",
    "make_synthetic",
    "mnrl_grad",
    "mnrl_loss",
    "read_matrix",
    "save_corpus",
    "split_by_language",
    "success_at_k",
    "top_k",
    "train",
    "write_matrix",
]
