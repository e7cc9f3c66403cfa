"""Binary checkpoint codec.

Model blob, all integers little-endian::

    b"FECL" | version:u32 | input_dim:u32 | n_blocks:u32 | width:u32 * n_blocks
           | num_classes:u32 | init_seed:u64
           | float32 parameters: block0 W (row-major), block0 b, ..., classifier W, classifier b

Section container (a named table of blobs, used for per-client state)::

    b"FECS" | version:u32 | n_sections:u32
           | (name_len:u16 | name:utf-8 | offset:u64 | length:u64) * n_sections
           | payload; offsets are relative to the start of the payload
"""
from __future__ import annotations

import struct
from pathlib import Path
from typing import List, Tuple

import numpy as np

from ..exceptions import CheckpointError
from .model import ArchSpec, Layer, ModelParams

MODEL_MAGIC = b"FECL"
CONTAINER_MAGIC = b"FECS"
FORMAT_VERSION = 1

_F32 = np.dtype("<f4")


class _Reader:
    def __init__(self, payload: bytes):
        self._payload = payload
        self._offset = 0

    def take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._payload):
            raise CheckpointError("truncated checkpoint stream")
        chunk = self._payload[self._offset:end]
        self._offset = end
        return chunk

    def unpack(self, fmt: str) -> Tuple:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def remaining(self) -> int:
        return len(self._payload) - self._offset

    def finish(self) -> None:
        if self._offset != len(self._payload):
            raise CheckpointError("trailing bytes after checkpoint payload")


def _check_header(reader: _Reader, magic: bytes) -> None:
    found = reader.take(len(magic))
    if found != magic:
        raise CheckpointError(f"bad magic {found!r}, expected {magic!r}")
    (version,) = reader.unpack("<I")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported format version {version}")


def serialize(model: ModelParams) -> bytes:
    spec = model.spec
    header = [MODEL_MAGIC, struct.pack("<II", FORMAT_VERSION, spec.input_dim)]
    header.append(struct.pack(f"<I{len(spec.block_widths)}I", len(spec.block_widths), *spec.block_widths))
    header.append(struct.pack("<IQ", spec.num_classes, spec.init_seed))
    body = [np.ascontiguousarray(array, dtype=_F32).tobytes() for array in model.arrays()]
    return b"".join(header + body)


def deserialize(payload: bytes) -> ModelParams:
    reader = _Reader(payload)
    _check_header(reader, MODEL_MAGIC)
    input_dim, num_blocks = reader.unpack("<II")
    if num_blocks == 0:
        raise CheckpointError("checkpoint declares no blocks")
    widths = reader.unpack(f"<{num_blocks}I")
    num_classes, init_seed = reader.unpack("<IQ")
    try:
        spec = ArchSpec(
            input_dim=input_dim, block_widths=widths, num_classes=num_classes, init_seed=init_seed
        )
    except ValueError as exc:
        raise CheckpointError(f"invalid architecture in checkpoint ({exc})") from None

    layers = []
    for _, fan_out, fan_in in spec.layer_shapes():
        weight = np.frombuffer(reader.take(4 * fan_out * fan_in), dtype=_F32)
        bias = np.frombuffer(reader.take(4 * fan_out), dtype=_F32)
        layers.append(
            Layer(
                weight=weight.astype(np.float64).reshape(fan_out, fan_in),
                bias=bias.astype(np.float64),
            )
        )
    reader.finish()
    return ModelParams(spec=spec, blocks=layers[:-1], classifier=layers[-1])


def quantize(model: ModelParams) -> ModelParams:
    """The model exactly as it will read back from a checkpoint."""
    return deserialize(serialize(model))


def pack_sections(sections: List[Tuple[str, bytes]]) -> bytes:
    names = [name.encode("utf-8") for name, _ in sections]
    table = []
    offset = 0
    for name, (_, blob) in zip(names, sections):
        table.append(struct.pack("<H", len(name)) + name + struct.pack("<QQ", offset, len(blob)))
        offset += len(blob)
    header = CONTAINER_MAGIC + struct.pack("<II", FORMAT_VERSION, len(sections))
    return b"".join([header, *table, *(blob for _, blob in sections)])


def unpack_sections(payload: bytes) -> List[Tuple[str, bytes]]:
    reader = _Reader(payload)
    _check_header(reader, CONTAINER_MAGIC)
    (count,) = reader.unpack("<I")
    entries = []
    for _ in range(count):
        (name_len,) = reader.unpack("<H")
        name = reader.take(name_len).decode("utf-8")
        offset, length = reader.unpack("<QQ")
        entries.append((name, offset, length))
    body = reader.take(reader.remaining())
    sections = []
    expected = 0
    for name, offset, length in entries:
        if offset != expected or offset + length > len(body):
            raise CheckpointError(f"section table entry out of bounds: {name}")
        sections.append((name, body[offset:offset + length]))
        expected = offset + length
    if expected != len(body):
        raise CheckpointError("trailing bytes after section payload")
    return sections


def write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    try:
        path.write_bytes(payload)
    except OSError as exc:
        raise CheckpointError(f"cannot write checkpoint ({exc.strerror})", path) from None


def read_bytes(path: Path) -> bytes:
    if not path.exists():
        raise CheckpointError("checkpoint not found", path)
    try:
        return path.read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint ({exc.strerror})", path) from None


def save_model(path: Path, model: ModelParams) -> None:
    write_bytes(path, serialize(model))


def load_model(path: Path) -> ModelParams:
    payload = read_bytes(path)
    try:
        return deserialize(payload)
    except CheckpointError as exc:
        raise CheckpointError(exc.message, path) from None
