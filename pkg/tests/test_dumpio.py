import struct

import numpy as np
import pytest

from tokcover.dumpio import (
    FLAG_AGENT,
    MAGIC,
    ResultRecord,
    VERSION,
    _HEADER,
    read_dump,
    write_dump,
)
from tokcover.errors import (
    BadMagicError,
    BadVersionError,
    InvariantViolationError,
    TruncatedFileError,
)
from tokcover.pipeline import select_tokens, synth_sample
from tokcover.core import CoverageConfig


def _roundtrip_bytes(sample, tmp_path, name="a.mmcv"):
    p = tmp_path / name
    write_dump(sample, p)
    return p, p.read_bytes()


def test_roundtrip_identity(tmp_path):
    sample = synth_sample(12, 4, 2, 6, 8, seed=0, num_words=3,
                          crop_sizes=[6, 6])
    p, blob = _roundtrip_bytes(sample, tmp_path)
    loaded = read_dump(p)
    p2 = tmp_path / "b.mmcv"
    write_dump(loaded, p2)
    assert p2.read_bytes() == blob
    assert loaded.word_spans == sample.word_spans
    assert loaded.crop_sizes == sample.crop_sizes
    np.testing.assert_array_equal(loaded.text.data, sample.text.data)


@pytest.mark.parametrize("kwargs", [
    {},
    {"o": 3},
    {"num_words": 2},
    {"crop_sizes": [5, 5]},
    {"o": 2, "num_words": 4, "crop_sizes": [4, 6]},
])
def test_roundtrip_optional_sections(tmp_path, kwargs):
    o = kwargs.pop("o", 0)
    sample = synth_sample(10, 4, o, 6, 8, seed=1, **kwargs)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    loaded = read_dump(p)
    p2 = tmp_path / "b.mmcv"
    write_dump(loaded, p2)
    assert p2.read_bytes() == blob


def test_truncated_payload(tmp_path):
    sample = synth_sample(10, 4, 0, 6, 8, seed=2)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    p.write_bytes(blob[:len(blob) // 2])
    with pytest.raises(TruncatedFileError):
        read_dump(p)


def test_truncated_header(tmp_path):
    p = tmp_path / "t.mmcv"
    p.write_bytes(MAGIC + b"\x01\x00")
    with pytest.raises(TruncatedFileError):
        read_dump(p)


def test_bad_magic(tmp_path):
    p = tmp_path / "bad.mmcv"
    p.write_bytes(b"NOPE" + b"\x00" * 60)
    with pytest.raises(BadMagicError):
        read_dump(p)


def test_bad_version(tmp_path):
    sample = synth_sample(4, 2, 0, 3, 3, seed=3)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    patched = MAGIC + struct.pack("<I", 99) + blob[8:]
    p.write_bytes(patched)
    with pytest.raises(BadVersionError):
        read_dump(p)


def test_inconsistent_agent_flag(tmp_path):
    sample = synth_sample(4, 2, 0, 3, 3, seed=4)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    # Clear flags but claim o=2 in the counts.
    magic, version, flags, n, m, o, dpre, dpost, ns, nc = _HEADER.unpack_from(blob)
    header = _HEADER.pack(magic, version, 0, n, m, 2, dpre, dpost, ns, nc)
    p.write_bytes(header + blob[_HEADER.size:])
    with pytest.raises(InvariantViolationError):
        read_dump(p)


def test_trailing_bytes_rejected(tmp_path):
    sample = synth_sample(4, 2, 0, 3, 3, seed=5)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    p.write_bytes(blob + b"\x00\x00")
    with pytest.raises(InvariantViolationError):
        read_dump(p)


def test_bad_spans_rejected_at_read(tmp_path):
    sample = synth_sample(6, 4, 0, 3, 3, seed=6, num_words=2)
    p, blob = _roundtrip_bytes(sample, tmp_path)
    # Corrupt the spans payload (last 2*2 u32): make the first span start at 1.
    arr = bytearray(blob)
    spans_off = len(blob) - 2 * 2 * 4
    struct.pack_into("<I", arr, spans_off, 1)
    p.write_bytes(bytes(arr))
    with pytest.raises(InvariantViolationError):
        read_dump(p)


def test_bad_crop_sum_rejected_at_read(tmp_path):
    sample = synth_sample(8, 3, 0, 3, 3, seed=7, crop_sizes=[4, 4])
    p, blob = _roundtrip_bytes(sample, tmp_path)
    arr = bytearray(blob)
    struct.pack_into("<I", arr, len(blob) - 8, 5)  # crops now sum to 9 != 8
    p.write_bytes(bytes(arr))
    with pytest.raises(InvariantViolationError):
        read_dump(p)


def test_loaded_sample_flows_through_selection(tmp_path):
    sample = synth_sample(16, 4, 2, 6, 8, seed=8, num_words=3)
    p, _ = _roundtrip_bytes(sample, tmp_path)
    loaded = read_dump(p)
    res = select_tokens(loaded, CoverageConfig(budget=4))
    assert len(res.selected) == 4


# ------------------------------------------------------------- ResultRecord

def test_record_json_roundtrip():
    sample = synth_sample(10, 4, 0, 6, 8, seed=9)
    res = select_tokens(sample, CoverageConfig(budget=3))
    rec = ResultRecord.from_selection("s0", res, params={"alpha": 0.5},
                                      timing_ns={"total_ns": 123})
    line = rec.to_json()
    back = ResultRecord.from_json(line)
    assert back.selected == rec.selected
    assert back.objective_fused == rec.objective_fused
    assert back.timing_ns == {}  # omitted by default
    assert "timing" not in line
    assert "timing_ns" in rec.to_json(emit_timings=True)
