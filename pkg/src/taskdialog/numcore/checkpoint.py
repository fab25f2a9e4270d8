"""Checkpoint container: a JSON manifest plus a raw little-endian blob.

Single file layout:
    8 bytes  little-endian uint64, manifest byte length
    manifest UTF-8 JSON: {"version": "fsdm-ckpt-1", "extra": {...},
                          "tensors": [{name, shape, dtype, offset}, ...]}
    blob     concatenated little-endian float data, in manifest order

The manifest is serialized with sorted keys and fixed separators so the
same tensors always produce byte-identical files.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .tensor import Tensor

CHECKPOINT_VERSION = "fsdm-ckpt-1"

_DTYPES = {"float32": "<f4", "float64": "<f8"}


class CheckpointError(RuntimeError):
    """The file does not match the manifest contract."""


def save_checkpoint(path, tensors: dict[str, Tensor], extra: dict | None = None):
    entries = []
    blobs = []
    offset = 0
    for name in sorted(tensors):
        arr = tensors[name].data
        if arr.dtype.name not in _DTYPES:
            raise CheckpointError(f"unsupported dtype {arr.dtype.name} for '{name}'")
        raw = np.ascontiguousarray(arr).astype(_DTYPES[arr.dtype.name]).tobytes()
        entries.append({
            "name": name,
            "shape": list(arr.shape),
            "dtype": arr.dtype.name,
            "offset": offset,
        })
        blobs.append(raw)
        offset += len(raw)
    manifest = {"version": CHECKPOINT_VERSION, "extra": extra or {}, "tensors": entries}
    payload = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        header = fh.read(8)
        if len(header) != 8:
            raise CheckpointError("truncated header")
        (manifest_len,) = struct.unpack("<Q", header)
        payload = fh.read(manifest_len)
        if len(payload) != manifest_len:
            raise CheckpointError("truncated manifest")
        try:
            manifest = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as err:
            raise CheckpointError(f"bad manifest: {err}") from None
        if manifest.get("version") != CHECKPOINT_VERSION:
            raise CheckpointError(
                f"version mismatch: {manifest.get('version')!r} != {CHECKPOINT_VERSION!r}")
        blob = fh.read()
    out = {}
    for entry in manifest["tensors"]:
        dtype = _DTYPES.get(entry["dtype"])
        if dtype is None:
            raise CheckpointError(f"unsupported dtype {entry['dtype']!r}")
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        arr = np.frombuffer(blob, dtype=dtype, count=count, offset=start)
        if arr.size != count:
            raise CheckpointError(f"blob too short for tensor '{entry['name']}'")
        out[entry["name"]] = arr.reshape(shape).astype(entry["dtype"])
    return out, manifest.get("extra", {})
