"""Deterministic on-disk container for named numpy arrays plus metadata.

Format (version 1): a single UTF-8 JSON header line, then the raw
little-endian array bytes concatenated in header order. Nothing
volatile (timestamps, hostnames) is ever written, so identical inputs
produce identical bytes — a requirement for reproducibility checks
that hash pipeline artifacts.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

import numpy as np

FORMAT_VERSION = 1


class StoreError(Exception):
    pass


def save_arrays(path, arrays: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> None:
    header: dict[str, Any] = {
        "format_version": FORMAT_VERSION,
        "meta": dict(meta or {}),
        "arrays": [],
    }
    blobs = []
    for name in arrays:
        arr = np.ascontiguousarray(arrays[name])
        if not np.issubdtype(arr.dtype, np.number):
            raise StoreError(f"array {name!r} has non-numeric dtype {arr.dtype}")
        blob = arr.astype(arr.dtype.newbyteorder("<")).tobytes()
        header["arrays"].append({
            "name": name,
            "dtype": arr.dtype.str.replace(">", "<").replace("=", "<"),
            "shape": list(arr.shape),
            "nbytes": len(blob),
        })
        blobs.append(blob)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict[str, Any]]:
    with open(path, "rb") as fh:
        line = fh.readline()
        try:
            header = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise StoreError(f"{path}: not an array container (bad header)") from None
        if header.get("format_version") != FORMAT_VERSION:
            raise StoreError(
                f"{path}: unsupported container version {header.get('format_version')!r}"
            )
        arrays: dict[str, np.ndarray] = {}
        for entry in header["arrays"]:
            blob = fh.read(entry["nbytes"])
            if len(blob) != entry["nbytes"]:
                raise StoreError(f"{path}: truncated array {entry['name']!r}")
            arrays[entry["name"]] = np.frombuffer(blob, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()
    return arrays, header["meta"]
