from __future__ import annotations

import struct

import numpy as np
import pytest

from fedecl.data.grouping import sort_and_group
from fedecl.ecl.experts import init_experts
from fedecl.ecl.state import PersonalizedState, decode_state, encode_state, load_state, save_state
from fedecl.exceptions import CheckpointError
from fedecl.nncore.checkpoint import (
    MODEL_MAGIC,
    deserialize,
    load_model,
    pack_sections,
    quantize,
    save_model,
    serialize,
    unpack_sections,
)


def test_round_trip_is_bit_exact_after_quantization(small_model):
    restored = deserialize(serialize(small_model))
    assert restored.spec == small_model.spec
    for original, decoded in zip(small_model.arrays(), restored.arrays()):
        assert np.array_equal(original.astype(np.float32).astype(np.float64), decoded)
    assert serialize(restored) == serialize(small_model)


def test_quantized_model_round_trips_bitwise(small_model):
    quantized = quantize(small_model)
    assert deserialize(serialize(quantized)).bit_equal(quantized)


def test_header_layout(small_model):
    payload = serialize(small_model)
    assert payload[:4] == MODEL_MAGIC
    version, input_dim, num_blocks = struct.unpack("<III", payload[4:16])
    assert (version, input_dim, num_blocks) == (1, 5, 2)
    floats = sum(array.size for array in small_model.arrays())
    assert len(payload) == 16 + 4 * 2 + 4 + 8 + 4 * floats


def test_decoded_model_has_no_frozen_group(small_model):
    small_model.freeze_only(["classifier"])
    assert not any(deserialize(serialize(small_model)).freeze_mask.values())


def test_corrupt_magic_is_rejected(small_model):
    payload = b"XXXX" + serialize(small_model)[4:]
    with pytest.raises(CheckpointError, match="bad magic"):
        deserialize(payload)


def test_unknown_version_is_rejected(small_model):
    payload = bytearray(serialize(small_model))
    payload[4:8] = struct.pack("<I", 99)
    with pytest.raises(CheckpointError, match="version"):
        deserialize(bytes(payload))


@pytest.mark.parametrize("cut", [3, 10, 30, -1])
def test_truncated_stream_is_rejected(small_model, cut):
    payload = serialize(small_model)
    with pytest.raises(CheckpointError):
        deserialize(payload[:cut])


def test_trailing_bytes_are_rejected(small_model):
    with pytest.raises(CheckpointError):
        deserialize(serialize(small_model) + b"\x00")


def test_file_round_trip_and_missing_file(tmp_path, small_model):
    path = tmp_path / "nested" / "global.fecl"
    save_model(path, small_model)
    assert load_model(path).bit_equal(quantize(small_model))
    with pytest.raises(CheckpointError, match="not found"):
        load_model(tmp_path / "absent.fecl")


def test_section_container_round_trip():
    sections = [("meta", b"{}"), ("global", b"abc"), ("expert0", b"")]
    assert unpack_sections(pack_sections(sections)) == sections


def _state(model, counts, experts=2, lam=0.5):
    assignment = sort_and_group(counts, experts)
    copies = init_experts(model, experts)
    return PersonalizedState(
        client_id=4,
        retrained_global=quantize(model),
        experts=[quantize(copies[i]) if group else None for i, group in enumerate(assignment.groups)],
        assignment=assignment,
        lam=lam,
    )


def test_state_codec_round_trip(small_model):
    state = _state(small_model, [5, 3, 0], experts=3, lam=0.25)
    decoded = decode_state(encode_state(state))
    assert decoded.client_id == 4
    assert decoded.lam == 0.25
    assert decoded.assignment == state.assignment
    assert decoded.experts[2] is None
    assert decoded.experts[0].bit_equal(state.experts[0])
    assert decoded.retrained_global.bit_equal(state.retrained_global)
    assert encode_state(decoded) == encode_state(state)


def test_state_file_round_trip(tmp_path, small_model):
    state = _state(small_model, [2, 2, 2])
    save_state(tmp_path / "client_004.fecs", state)
    assert encode_state(load_state(tmp_path / "client_004.fecs")) == encode_state(state)


def test_state_missing_expert_section(small_model):
    state = _state(small_model, [2, 2, 2])
    sections = [(name, blob) for name, blob in unpack_sections(encode_state(state)) if name != "expert1"]
    with pytest.raises(CheckpointError, match="expert1"):
        decode_state(pack_sections(sections))
