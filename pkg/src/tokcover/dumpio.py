"""Embedding-dump binary format and line-delimited result records."""

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .core import Role, TokenMatrix
from .errors import (
    BadMagicError,
    BadVersionError,
    InvariantViolationError,
    TruncatedFileError,
)
from .pipeline import SampleInput
from .similarity import BadSpansError, WordSpans

MAGIC = b"MMCV"
VERSION = 1

FLAG_AGENT = 1 << 0
FLAG_SPANS = 1 << 1
FLAG_CROPS = 1 << 2

_HEADER = struct.Struct("<4sII7I")  # magic, version, flags, 7 counts


def write_dump(sample, path):
    """Serialize a SampleInput to the bit-exact on-disk container."""
    sample.validate()
    agent = sample.agent_text
    spans = sample.word_spans
    crops = sample.crop_sizes
    flags = 0
    if agent is not None and agent.rows > 0:
        flags |= FLAG_AGENT
    if spans is not None:
        flags |= FLAG_SPANS
    if crops is not None:
        flags |= FLAG_CROPS
    o = agent.rows if flags & FLAG_AGENT else 0
    num_spans = len(spans) if flags & FLAG_SPANS else 0
    num_crops = len(crops) if flags & FLAG_CROPS else 0

    header = _HEADER.pack(
        MAGIC, VERSION, flags,
        sample.n, sample.text.rows, o,
        sample.vision_pre.dim, sample.vision_post.dim,
        num_spans, num_crops)

    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(sample.vision_pre.data.astype("<f4").tobytes())
        fh.write(sample.vision_post.data.astype("<f4").tobytes())
        fh.write(sample.text.data.astype("<f4").tobytes())
        if flags & FLAG_AGENT:
            fh.write(agent.data.astype("<f4").tobytes())
        if flags & FLAG_SPANS:
            arr = np.array(spans.spans, dtype="<u4")
            fh.write(arr.tobytes())
        if flags & FLAG_CROPS:
            fh.write(np.array(crops, dtype="<u4").tobytes())


def read_dump(path):
    """Load and fully validate an embedding dump."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size:
        if blob[:4] != MAGIC:
            raise BadMagicError(f"not an embedding dump: {path}")
        raise TruncatedFileError(f"file shorter than the header: {path}")
    magic, version, flags, n, m, o, dim_pre, dim_post, num_spans, num_crops = \
        _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r} in {path}")
    if version != VERSION:
        raise BadVersionError(f"unsupported version {version} in {path}")

    if flags & ~(FLAG_AGENT | FLAG_SPANS | FLAG_CROPS):
        raise InvariantViolationError(f"unknown flag bits {flags:#x}")
    if bool(flags & FLAG_AGENT) != (o > 0):
        raise InvariantViolationError(
            f"agent flag is {bool(flags & FLAG_AGENT)} but o={o}")
    if not flags & FLAG_SPANS and num_spans > 0:
        raise InvariantViolationError("spans flag clear but num_spans > 0")
    if flags & FLAG_SPANS and num_spans == 0:
        raise InvariantViolationError("spans flag set but num_spans == 0")
    if not flags & FLAG_CROPS and num_crops > 0:
        raise InvariantViolationError("crops flag clear but num_crops > 0")
    if flags & FLAG_CROPS and num_crops == 0:
        raise InvariantViolationError("crops flag set but num_crops == 0")
    if dim_pre < 1 or dim_post < 1:
        raise InvariantViolationError("embedding widths must be >= 1")

    off = _HEADER.size

    def take_f32(rows, dim, role):
        nonlocal off
        nbytes = rows * dim * 4
        if off + nbytes > len(blob):
            raise TruncatedFileError(
                f"file ends inside the {role.value} section: {path}")
        arr = np.frombuffer(blob, dtype="<f4", count=rows * dim, offset=off)
        off += nbytes
        return TokenMatrix.from_array(arr.reshape(rows, dim), role)

    def take_u32(count, what):
        nonlocal off
        nbytes = count * 4
        if off + nbytes > len(blob):
            raise TruncatedFileError(f"file ends inside the {what} section: {path}")
        arr = np.frombuffer(blob, dtype="<u4", count=count, offset=off)
        off += nbytes
        return arr

    vision_pre = take_f32(n, dim_pre, Role.VISION_PRE)
    vision_post = take_f32(n, dim_post, Role.VISION_POST)
    text = take_f32(m, dim_post, Role.TEXT_QUERY)
    agent = take_f32(o, dim_post, Role.AGENT_TEXT) if flags & FLAG_AGENT else None
    spans = None
    if flags & FLAG_SPANS:
        pairs = take_u32(num_spans * 2, "spans").reshape(num_spans, 2)
        spans = WordSpans.from_pairs(pairs.tolist())
    crops = None
    if flags & FLAG_CROPS:
        crops = tuple(int(c) for c in take_u32(num_crops, "crop sizes"))
    if off != len(blob):
        raise InvariantViolationError(
            f"{len(blob) - off} trailing bytes after the payload")

    sample = SampleInput(
        vision_pre=vision_pre, vision_post=vision_post, text=text,
        agent_text=agent, word_spans=spans, crop_sizes=crops)
    try:
        sample.validate()
    except (ValueError, BadSpansError) as exc:
        raise InvariantViolationError(str(exc)) from exc
    return sample


@dataclass
class ResultRecord:
    """One selection outcome, serializable as a single JSON line.

    Timings are carried in memory but omitted from serialization by
    default so output bytes stay identical across runs and thread counts.
    """

    sample_id: str
    selected: tuple
    gains: tuple
    objective_tv: float
    objective_vv: float
    objective_fused: float
    effective_tau_v: float
    params: dict = field(default_factory=dict)
    timing_ns: dict = field(default_factory=dict)

    @classmethod
    def from_selection(cls, sample_id, result, params=None, timing_ns=None):
        return cls(
            sample_id=sample_id,
            selected=tuple(result.selected),
            gains=tuple(result.gains),
            objective_tv=result.objective_tv,
            objective_vv=result.objective_vv,
            objective_fused=result.objective_fused,
            effective_tau_v=result.effective_tau_v,
            params=dict(params or {}),
            timing_ns=dict(timing_ns or {}),
        )

    def to_json(self, emit_timings=False):
        payload = {
            "id": self.sample_id,
            "selected": list(self.selected),
            "gains": list(self.gains),
            "objective_tv": self.objective_tv,
            "objective_vv": self.objective_vv,
            "objective_fused": self.objective_fused,
            "effective_tau_v": self.effective_tau_v,
            "params": self.params,
        }
        if emit_timings:
            payload["timing_ns"] = self.timing_ns
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        return cls(
            sample_id=d["id"],
            selected=tuple(d["selected"]),
            gains=tuple(d["gains"]),
            objective_tv=d["objective_tv"],
            objective_vv=d["objective_vv"],
            objective_fused=d["objective_fused"],
            effective_tau_v=d["effective_tau_v"],
            params=d.get("params", {}),
            timing_ns=d.get("timing_ns", {}),
        )
