"""Single-file binary container for index persistence.

Layout: 8-byte magic, u32 format version, u64 JSON length, JSON metadata,
then the raw bytes of each array in the order listed under meta["arrays"].
Writes are byte-deterministic for identical inputs (sorted JSON keys, no
timestamps), which the pipeline determinism guarantees rely on.
"""
from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import BadIndexFile

MAGIC = b"TRAGIDX\x00"
VERSION = 1


def save_store(path: str | Path, kind: str, meta: dict,
               arrays: dict[str, np.ndarray]) -> None:
    decls = [
        {"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape)}
        for name, arr in arrays.items()
    ]
    header = {"kind": kind, "meta": meta, "arrays": decls}
    blob = json.dumps(header, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for decl in decls:
            fh.write(np.ascontiguousarray(arrays[decl["name"]]).tobytes())


def load_store(path: str | Path, kind: str | None = None) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise BadIndexFile(f"{path}: not an index file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != VERSION:
            raise BadIndexFile(f"{path}: unsupported version {version}")
        (meta_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(meta_len).decode("utf-8"))
        if kind is not None and header.get("kind") != kind:
            raise BadIndexFile(
                f"{path}: expected kind {kind!r}, found {header.get('kind')!r}")
        arrays: dict[str, np.ndarray] = {}
        for decl in header["arrays"]:
            dtype = np.dtype(decl["dtype"])
            shape = tuple(decl["shape"])
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * dtype.itemsize)
            if len(buf) != count * dtype.itemsize:
                raise BadIndexFile(f"{path}: truncated array {decl['name']!r}")
            arrays[decl["name"]] = np.frombuffer(buf, dtype=dtype).reshape(shape).copy()
    return header["meta"], arrays
