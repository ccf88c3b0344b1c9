"""Checkpoint persistence, atomic file writes, and supernet slicing.

Checkpoint files are little-endian throughout:

    magic "BNASCKPT"
    format version       u32
    entry count          u32
    per entry: name length u16, UTF-8 name, rank u32, one u32 per dim,
               raw float32 payload in C order
    metadata length      u32
    metadata             UTF-8 JSON {template, ratios, seed}

Read errors carry the byte offset of the first bad field.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InputError
from .space import ExpansionCode, layer_geometry, uniform_code, validate_code
from .templates import NetworkTemplate

MAGIC = b"BNASCKPT"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    """Named float32 arrays plus the identity of the network they belong to."""

    arrays: dict[str, np.ndarray]
    template: str
    code: ExpansionCode
    seed: int


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a same-directory temp file and rename, so readers never
    observe a partial file."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def _ratio_list(code: ExpansionCode) -> list:
    return [int(r) if float(r).is_integer() else float(r) for r in code]


def serialize_checkpoint(ckpt: Checkpoint) -> bytes:
    parts = [MAGIC, struct.pack("<I", FORMAT_VERSION), struct.pack("<I", len(ckpt.arrays))]
    for name, arr in ckpt.arrays.items():
        if arr.dtype != np.float32:
            raise InputError(f"checkpoint array '{name}' must be float32, got {arr.dtype}")
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise InputError(f"checkpoint array name too long ({len(encoded)} bytes)")
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<I", arr.ndim))
        parts.append(struct.pack(f"<{arr.ndim}I", *arr.shape) if arr.ndim else b"")
        parts.append(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    meta = json.dumps(
        {"template": ckpt.template, "ratios": _ratio_list(ckpt.code), "seed": ckpt.seed},
        sort_keys=True,
    ).encode("utf-8")
    parts.append(struct.pack("<I", len(meta)))
    parts.append(meta)
    return b"".join(parts)


def write_checkpoint(path: str, ckpt: Checkpoint) -> None:
    atomic_write_bytes(path, serialize_checkpoint(ckpt))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int, what: str) -> bytes:
        if self.offset + n > len(self.data):
            raise FormatError(f"truncated while reading {what}", offset=self.offset)
        chunk = self.data[self.offset : self.offset + n]
        self.offset += n
        return chunk

    def u16(self, what: str) -> int:
        return struct.unpack("<H", self.take(2, what))[0]

    def u32(self, what: str) -> int:
        return struct.unpack("<I", self.take(4, what))[0]


def deserialize_checkpoint(data: bytes) -> Checkpoint:
    r = _Reader(data)
    if r.take(len(MAGIC), "magic") != MAGIC:
        raise FormatError("bad magic", offset=0)
    version_at = r.offset
    version = r.u32("format version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", offset=version_at)
    count = r.u32("entry count")
    arrays: dict[str, np.ndarray] = {}
    for i in range(count):
        name_len = r.u16(f"entry {i} name length")
        name_at = r.offset
        try:
            name = r.take(name_len, f"entry {i} name").decode("utf-8")
        except UnicodeDecodeError:
            raise FormatError(f"entry {i} name is not valid UTF-8", offset=name_at) from None
        if name in arrays:
            raise FormatError(f"duplicate entry name '{name}'", offset=name_at)
        rank = r.u32(f"entry '{name}' rank")
        shape = tuple(r.u32(f"entry '{name}' dim {d}") for d in range(rank))
        size = 1
        for d in shape:
            size *= d
        payload = r.take(4 * size, f"entry '{name}' payload")
        arrays[name] = np.frombuffer(payload, dtype="<f4").reshape(shape).copy()
    meta_len = r.u32("metadata length")
    meta_at = r.offset
    raw = r.take(meta_len, "metadata")
    if r.offset != len(data):
        raise FormatError("trailing bytes after metadata", offset=r.offset)
    try:
        meta = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise FormatError("metadata is not valid JSON", offset=meta_at) from None
    if not isinstance(meta, dict) or not {"template", "ratios", "seed"} <= set(meta):
        raise FormatError("metadata missing template/ratios/seed", offset=meta_at)
    return Checkpoint(
        arrays=arrays,
        template=str(meta["template"]),
        code=validate_code(meta["ratios"]),
        seed=int(meta["seed"]),
    )


def read_checkpoint(path: str) -> Checkpoint:
    with open(path, "rb") as f:
        return deserialize_checkpoint(f.read())


def inherit_weights(supernet: Checkpoint, template: NetworkTemplate, code) -> Checkpoint:
    """Slice a 4x-uniform supernet down to (template, code).

    Every array keeps the leading channels along its input- and
    output-channel axes: conv weights [out, in, :, :], fc weights
    [flattened-in, out] (rows are channel-major so a channel prefix is a
    row prefix), per-channel vectors [c]. With the all-4 code the result
    is an unchanged copy.
    """
    code = validate_code(code, template.n_genes)
    if supernet.template != template.name:
        raise InputError(f"supernet is for template '{supernet.template}', not '{template.name}'")
    if supernet.code != uniform_code(4, template.n_genes):
        raise InputError(f"supernet code {supernet.code} is not uniform 4x")
    target = {g.spec.name: g for g in layer_geometry(template, code)}
    source = {g.spec.name: g for g in layer_geometry(template, supernet.code)}
    sliced: dict[str, np.ndarray] = {}
    for name, arr in supernet.arrays.items():
        layer, _, field = name.rpartition(".")
        if layer not in target:
            raise InputError(f"checkpoint entry '{name}' matches no layer of '{template.name}'")
        want, have = target[layer], source[layer]
        kind = want.spec.kind
        if kind == "conv" and field == "weight":
            _check_fit(name, (want.out_ch, want.in_ch), (have.out_ch, have.in_ch), arr.shape[:2])
            out = arr[: want.out_ch, : want.in_ch]
        elif kind == "fc" and field == "weight":
            _check_fit(name, (want.in_features, want.out_ch), (have.in_features, have.out_ch), arr.shape)
            out = arr[: want.in_features, : want.out_ch]
        elif kind == "fc" and field == "bias":
            _check_fit(name, (want.out_ch,), (have.out_ch,), arr.shape)
            out = arr[: want.out_ch]
        elif kind == "bn":
            _check_fit(name, (want.in_ch,), (have.in_ch,), arr.shape)
            out = arr[: want.in_ch]
        else:
            raise InputError(f"checkpoint entry '{name}' has no slicing rule for kind '{kind}'")
        sliced[name] = np.ascontiguousarray(out)
    return Checkpoint(arrays=sliced, template=template.name, code=code, seed=supernet.seed)


def _check_fit(name: str, want: tuple, have: tuple, actual: tuple) -> None:
    if tuple(actual) != tuple(have):
        raise InputError(f"'{name}' has shape head {tuple(actual)}, expected {tuple(have)} for the supernet")
    for w, h in zip(want, have):
        if w > h:
            raise InputError(f"'{name}' target extent {w} exceeds supernet extent {h}")
