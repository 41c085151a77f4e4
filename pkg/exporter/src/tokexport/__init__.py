"""Export per-sample VLM token embeddings to binary dumps."""

from .backends import HFBackend, SyntheticBackend, TOKENS_PER_VIEW, view_count
from .dump import CapturedSample, write_dump
from .export import ExportConfig, export_batch, export_sample

__version__ = "0.1.0"

__all__ = [
    "CapturedSample",
    "ExportConfig",
    "HFBackend",
    "SyntheticBackend",
    "TOKENS_PER_VIEW",
    "export_batch",
    "export_sample",
    "view_count",
    "write_dump",
]
