"""Batch export of embedding dumps."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .backends import Backend, HFBackend, SyntheticBackend
from .dump import write_dump


@dataclass
class ExportConfig:
    model: str
    sources: list[str]
    output_dir: Path
    prompt: str = "Describe the image."
    capture_agent: bool = False
    agent_model: str | None = None
    max_samples: int | None = None
    seed: int = 0

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        if self.capture_agent != (self.agent_model is not None):
            raise ValueError(
                "agent model must be given iff agent capture is enabled")
        if self.max_samples is not None and self.max_samples < 1:
            raise ValueError("max samples must be positive")


def make_backend(config: ExportConfig) -> Backend:
    if config.model == "synthetic":
        return SyntheticBackend(seed=config.seed)
    return HFBackend(config.model, agent_model_id=config.agent_model)


def export_sample(backend: Backend, image, prompt: str, out_path: Path,
                  capture_agent: bool = False) -> Path:
    sample = backend.capture(image, prompt, capture_agent)
    write_dump(sample, out_path)
    return out_path


def export_batch(config: ExportConfig,
                 backend: Backend | None = None) -> list[Path]:
    """Export each source to ``<stem>.embedder.mmcv`` in the output dir.

    The ``.embedder`` filename infix records that text rows are token
    embedder outputs (not deeper hidden states).
    """
    config.output_dir.mkdir(parents=True, exist_ok=True)
    if not os.access(config.output_dir, os.W_OK):
        raise ValueError(f"output dir not writable: {config.output_dir}")
    if backend is None:
        backend = make_backend(config)

    sources = config.sources
    if config.max_samples is not None:
        sources = sources[:config.max_samples]

    written = []
    for source in sources:
        stem = Path(str(source).replace(":", "_").replace("/", "_")).stem
        out = config.output_dir / f"{stem}.embedder.mmcv"
        written.append(export_sample(backend, source, config.prompt, out,
                                     config.capture_agent))
    return written
