"""Saved-model file format.

Layout, all text lines UTF-8 and ``\\n``-terminated::

    TWOSTEP-MODEL <format version>
    <header: one line of JSON>
    CHECKSUM <sha256 hex of the header line bytes followed by the payload>
    <payload: raw tensor bytes>

The header lists every tensor as ``{"name", "dtype", "shape", "offset",
"nbytes"}``; offsets are relative to the payload start and every tensor is
stored C-contiguous as little-endian float64 (``<f8``). Besides the tensor
table the header carries the model kind, label schema, full settings and
model configuration, the fitted text artifacts, and the alphabet and
vocabulary digests.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ArtifactError
from .systems import NeuralSystem, System, export_system, import_system
from .textprep import ALPHABET, CharAlphabet, Vocab

MAGIC = "TWOSTEP-MODEL"
FORMAT_VERSION = 1
DTYPE = "<f8"


def save_model(system: System, path) -> Path:
    header, tensors = export_system(system)
    table, chunks, offset = [], [], 0
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype=DTYPE)
        raw = arr.tobytes()
        table.append({"name": name, "dtype": DTYPE, "shape": list(arr.shape), "offset": offset,
                      "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    header = dict(header)
    header.update({
        "format_version": FORMAT_VERSION,
        "library_version": __version__,
        "tensors": table,
        "alphabet_sha256": ALPHABET.digest(),
    })
    if "encoder" in header:
        header["alphabet_sha256"] = CharAlphabet(header["encoder"]["alphabet"]).digest()
        vocab = header["encoder"].get("vocab")
        header["vocab_sha256"] = Vocab(vocab).digest() if vocab is not None else None
    line = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    checksum = hashlib.sha256(line + payload).hexdigest()
    path = Path(path)
    path.write_bytes(f"{MAGIC} {FORMAT_VERSION}\n".encode() + line + b"\n"
                     + f"CHECKSUM {checksum}\n".encode() + payload)
    return path


def read_artifact(path) -> tuple[dict, dict[str, np.ndarray]]:
    """Parse and verify an artifact; raises ArtifactError on any inconsistency."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as err:
        raise ArtifactError(f"cannot read model: {err}", path=path) from None
    parts = blob.split(b"\n", 3)
    if len(parts) < 4:
        raise ArtifactError("truncated model file", path=path)
    magic, line, check, payload = parts
    fields = magic.decode("utf-8", "replace").split(" ")
    if len(fields) != 2 or fields[0] != MAGIC:
        raise ArtifactError("not a twostep model file", path=path)
    if fields[1] != str(FORMAT_VERSION):
        raise ArtifactError(f"model format version {fields[1]} is not supported "
                            f"(this library reads version {FORMAT_VERSION})", path=path)
    check = check.decode("utf-8", "replace")
    if not check.startswith("CHECKSUM "):
        raise ArtifactError("missing checksum line", path=path)
    if hashlib.sha256(line + payload).hexdigest() != check[len("CHECKSUM "):]:
        raise ArtifactError("checksum mismatch: model file is corrupted", path=path)
    header = json.loads(line.decode("utf-8"))
    tensors = {}
    for entry in header["tensors"]:
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        if hi > len(payload):
            raise ArtifactError(f"tensor {entry['name']} runs past end of payload", path=path)
        arr = np.frombuffer(payload[lo:hi], dtype=entry["dtype"]).reshape(entry["shape"])
        tensors[entry["name"]] = arr.astype(np.float64)
    return header, tensors


def load_model(path) -> System:
    header, tensors = read_artifact(path)
    enc = header.get("encoder")
    if enc is not None:
        alphabet = CharAlphabet(enc["alphabet"])
        if alphabet.digest() != header.get("alphabet_sha256"):
            raise ArtifactError("alphabet digest does not match stored alphabet", path=path)
        if alphabet.digest() != ALPHABET.digest():
            raise ArtifactError("model was built with a different character alphabet", path=path)
        if enc.get("vocab") is not None and Vocab(enc["vocab"]).digest() != header.get("vocab_sha256"):
            raise ArtifactError("vocabulary digest does not match stored vocabulary", path=path)
    return import_system(header, tensors)


def embedding_digest(system: System) -> str | None:
    if isinstance(system, NeuralSystem) and system.model is not None and "embedding.table" in system.model.params:
        return system.model.params.digest("embedding.table")
    return None
