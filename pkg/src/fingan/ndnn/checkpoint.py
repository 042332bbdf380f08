"""``ndnn-ckpt-v1`` checkpoint encoding.

A checkpoint is a JSON object::

    {"format": "ndnn-ckpt-v1",
     "networks": {"<name>": [{"kind": ..., "hyper": {...},
                              "arrays": {"W": {"shape": [...], "data": "<base64>"}}}, ...]},
     ...extra top-level sections...}

Array data is the raw little-endian float64 buffer, base64-encoded.
"""

from __future__ import annotations

import base64
import hashlib
import json

import numpy as np

from fingan.errors import BadCheckpoint
from fingan.ndnn.layers import Sequential, build_layer

FORMAT_TAG = "ndnn-ckpt-v1"


def encode_array(arr) -> dict:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    return {"shape": list(arr.shape), "data": base64.b64encode(arr.tobytes()).decode("ascii")}


def decode_array(obj) -> np.ndarray:
    raw = base64.b64decode(obj["data"])
    arr = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    shape = tuple(obj["shape"])
    if arr.size != int(np.prod(shape, dtype=np.int64)):
        raise BadCheckpoint(f"array payload of {arr.size} values does not fit shape {shape}")
    return arr.reshape(shape)


def network_to_manifest(net: Sequential) -> list:
    out = []
    for layer in net:
        arrays = {k: encode_array(v) for k, v in {**layer.params, **layer.buffers}.items()}
        out.append({"kind": layer.kind, "hyper": layer.hyper(), "arrays": arrays})
    return out


def network_from_manifest(entries) -> Sequential:
    layers = []
    for i, entry in enumerate(entries):
        try:
            layer = build_layer(entry["kind"], entry.get("hyper", {}))
            for k, obj in entry.get("arrays", {}).items():
                arr = decode_array(obj)
                target = layer.params if k in layer.params else layer.buffers if k in layer.buffers else None
                if target is None:
                    raise BadCheckpoint(f"layer {i} ({entry['kind']}) has no array {k!r}")
                if target[k].shape != arr.shape:
                    raise BadCheckpoint(f"layer {i} array {k!r}: shape {arr.shape} != {target[k].shape}")
                target[k] = arr
        except (KeyError, TypeError, ValueError) as exc:
            raise BadCheckpoint(f"layer {i}: {exc}") from exc
        layer.zero_grad()
        layers.append(layer)
    return Sequential(layers)


def dumps(networks: dict, **sections) -> str:
    doc = {"format": FORMAT_TAG, "networks": {name: network_to_manifest(net) for name, net in networks.items()}}
    doc.update(sections)
    return json.dumps(doc, indent=1)


def loads(text: str):
    """Return ``(networks, doc)``; ``doc`` holds the extra sections."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadCheckpoint(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != FORMAT_TAG:
        raise BadCheckpoint(f"missing or wrong format tag (expected {FORMAT_TAG})")
    nets = {name: network_from_manifest(entries) for name, entries in doc.get("networks", {}).items()}
    return nets, doc


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()
