"""Binary embedding-dump writer.

Format (little-endian, no padding): magic ``MMCV``, version ``u32 = 1``,
flags ``u32`` (bit0 agent rows, bit1 word spans, bit2 crop sizes), seven
``u32`` counts (n, m, o, dim_pre, dim_post, num_spans, num_crops), then
float32 payload sections vision_pre (n x dim_pre), vision_post
(n x dim_post), text (m x dim_post), optional agent (o x dim_post),
optional spans (num_spans x 2 u32 pairs), optional crop sizes
(num_crops u32).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"MMCV"
VERSION = 1
FLAG_AGENT = 1
FLAG_SPANS = 2
FLAG_CROPS = 4

_HEADER = struct.Struct("<4sII7I")


@dataclass
class CapturedSample:
    """Raw per-sample capture before normalization and serialization."""

    vision_pre: np.ndarray
    vision_post: np.ndarray
    text: np.ndarray
    agent: np.ndarray | None = None
    word_spans: list[tuple[int, int]] = field(default_factory=list)
    crop_sizes: list[int] = field(default_factory=list)

    def validate(self):
        n = self.vision_pre.shape[0]
        if self.vision_post.shape[0] != n:
            raise ValueError("vision_pre/vision_post row counts differ")
        if self.text.shape[1] != self.vision_post.shape[1]:
            raise ValueError("text and vision_post dims differ")
        if self.agent is not None and self.agent.shape[1] != self.text.shape[1]:
            raise ValueError("agent and text dims differ")
        if self.word_spans:
            pos = 0
            for start, end in self.word_spans:
                if start != pos or end <= start:
                    raise ValueError("word spans must be contiguous and cover")
                pos = end
            if pos != self.text.shape[0]:
                raise ValueError("word spans must cover all text rows")
        if self.crop_sizes and sum(self.crop_sizes) != n:
            raise ValueError("crop sizes must sum to the token count")


def _unit_rows(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if (norms == 0).any():
        raise ValueError("cannot normalize a zero embedding row")
    return (m / norms).astype("<f4")


def write_dump(sample: CapturedSample, path) -> None:
    """L2-normalize all embedding rows and write one dump file."""
    sample.validate()
    pre = _unit_rows(sample.vision_pre)
    post = _unit_rows(sample.vision_post)
    text = _unit_rows(sample.text)
    agent = _unit_rows(sample.agent) if sample.agent is not None else None

    flags = 0
    o = 0
    if agent is not None and agent.shape[0] > 0:
        flags |= FLAG_AGENT
        o = agent.shape[0]
    if sample.word_spans:
        flags |= FLAG_SPANS
    if sample.crop_sizes:
        flags |= FLAG_CROPS

    header = _HEADER.pack(MAGIC, VERSION, flags, pre.shape[0],
                          text.shape[0], o, pre.shape[1], post.shape[1],
                          len(sample.word_spans), len(sample.crop_sizes))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(pre.tobytes())
        fh.write(post.tobytes())
        fh.write(text.tobytes())
        if flags & FLAG_AGENT:
            fh.write(agent.tobytes())
        if flags & FLAG_SPANS:
            spans = np.asarray(sample.word_spans, dtype="<u4")
            fh.write(spans.tobytes())
        if flags & FLAG_CROPS:
            fh.write(np.asarray(sample.crop_sizes, dtype="<u4").tobytes())
