"""Named-tensor checkpoint container.

Layout: one JSON manifest line, then raw little-endian float64 buffers.
Manifest entries carry {name, shape, trainable, offset} where offset is
the byte position of the tensor within the binary section.  An optional
architecture dict rides along for load-time validation of policy nets.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .layers import Param

MAGIC = "cableroute-ckpt"


def save_checkpoint(path, params: dict, arch: dict | None = None):
    entries = []
    offset = 0
    blobs = []
    for name in sorted(params):
        p = params[name]
        blob = np.ascontiguousarray(p.value, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(p.value.shape),
                        "trainable": bool(p.trainable), "offset": offset})
        offset += len(blob)
        blobs.append(blob)
    manifest = {"magic": MAGIC, "version": 1, "arch": arch, "tensors": entries}
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest).encode() + b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path):
    """Returns (dict name -> Param, arch dict or None)."""
    with open(path, "rb") as fh:
        header = fh.readline()
        manifest = json.loads(header)
        if manifest.get("magic") != MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        data = fh.read()
    params = {}
    for ent in manifest["tensors"]:
        shape = tuple(ent["shape"])
        n = int(np.prod(shape)) if shape else 1
        start = ent["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=n, offset=start).reshape(shape)
        params[ent["name"]] = Param(arr.copy(), trainable=ent["trainable"])
    return params, manifest.get("arch")


def params_hash(params: dict, prefix: str = "") -> str:
    """Digest of all tensors whose name starts with prefix (frozen-check aid)."""
    h = hashlib.sha256()
    for name in sorted(params):
        if not name.startswith(prefix):
            continue
        p = params[name]
        h.update(name.encode())
        h.update(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    return h.hexdigest()
