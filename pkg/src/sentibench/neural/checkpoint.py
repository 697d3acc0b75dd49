"""Binary checkpoint format for the BiLSTM model.

Layout (all integers little-endian)::

    b"SBNN"                 magic
    uint32                  format version (1)
    uint32                  header length in bytes
    header                  UTF-8 JSON: hp, vocab, vocab_sha256, tensors
    float32 blocks          one per tensor, C order, in header order

``tensors`` lists ``{"name", "shape"}`` in the canonical parameter order
(embedding, lstm1.fwd, lstm1.bwd, lstm2.fwd, lstm2.bwd, attention, head).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .model import HyperParams, param_shapes
from .vocab import Vocabulary

MAGIC = b"SBNN"
VERSION = 1


def save_checkpoint(path, params: dict, hp: HyperParams, vocab: Vocabulary,
                    extra: dict | None = None) -> None:
    """Write a checkpoint; ``extra`` holds additional JSON-able header fields."""
    expected = param_shapes(hp, vocab.size)
    if list(expected) != list(params):
        raise ValueError("parameter names do not follow the canonical order")
    header = {
        "hp": asdict(hp),
        "vocab": list(vocab.id_to_token),
        "vocab_sha256": vocab.digest(),
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in params.items()],
        **(extra or {}),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for v in params.values():
            fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())


def is_checkpoint(path) -> bool:
    try:
        with open(path, "rb") as fh:
            return fh.read(4) == MAGIC
    except OSError:
        return False


def load_checkpoint(path, dtype=np.float32, with_header: bool = False):
    """Return ``(params, hp, vocab)``, plus the raw header when ``with_header``."""
    with open(path, "rb") as fh:
        if fh.read(4) != MAGIC:
            raise ValueError(f"{path}: not a model checkpoint")
        version, hlen = struct.unpack("<II", fh.read(8))
        if version != VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        vocab = Vocabulary(tuple(header["vocab"]))
        if vocab.digest() != header["vocab_sha256"]:
            raise ValueError(f"{path}: vocabulary hash mismatch")
        params = {}
        for spec in header["tensors"]:
            shape = tuple(spec["shape"])
            count = int(np.prod(shape))
            raw = fh.read(4 * count)
            if len(raw) != 4 * count:
                raise ValueError(f"{path}: truncated tensor {spec['name']}")
            params[spec["name"]] = np.frombuffer(raw, dtype="<f4").reshape(shape).astype(dtype)
    if with_header:
        return params, HyperParams(**header["hp"]), vocab, header
    return params, HyperParams(**header["hp"]), vocab
