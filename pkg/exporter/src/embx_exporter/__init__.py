"""Batch embedding exporter emitting EMBX matrices."""

__version__ = "0.1.0"

from .embx import ExportError, write_embx
from .encoders import HashingEncoder, load_encoder
from .export import ExportJob, export, read_prepared

__all__ = [
    "ExportError",
    "ExportJob",
    "HashingEncoder",
    "export",
    "load_encoder",
    "read_prepared",
    "write_embx",
]
