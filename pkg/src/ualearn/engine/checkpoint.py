"""Engine checkpoints: pool state plus model, checksummed (magic "UALS")."""

import hashlib
import io
import json
import struct

from ..errors import IntegrityError, ParseError
from ..modelio import model_from_bytes, model_to_bytes
from .pool import PoolState

MAGIC = b"UALS"
VERSION = 1


def checkpoint_bytes(state, model, meta=None):
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    state_blob = json.dumps({"state": state.to_dict(), "meta": meta or {}},
                            sort_keys=True).encode("utf-8")
    model_blob = model_to_bytes(model)
    buf.write(struct.pack("<Q", len(state_blob)))
    buf.write(state_blob)
    buf.write(struct.pack("<Q", len(model_blob)))
    buf.write(model_blob)
    payload = buf.getvalue()
    return payload + hashlib.sha256(payload).digest()


def save_checkpoint(path, state, model, meta=None):
    with open(path, "wb") as fh:
        fh.write(checkpoint_bytes(state, model, meta))


def restore_checkpoint(path):
    """(state, model, meta); raises IntegrityError on any corruption."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 56:
        raise IntegrityError(f"{path}: checkpoint too short")
    payload, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise IntegrityError(f"{path}: checkpoint checksum mismatch")
    if payload[:4] != MAGIC:
        raise ParseError(f"{path}: not a UALS checkpoint")
    (version,) = struct.unpack("<I", payload[4:8])
    if version != VERSION:
        raise ParseError(f"{path}: unsupported checkpoint version {version}")
    offset = 8
    (state_len,) = struct.unpack("<Q", payload[offset:offset + 8])
    offset += 8
    state_doc = json.loads(payload[offset:offset + state_len].decode("utf-8"))
    offset += state_len
    (model_len,) = struct.unpack("<Q", payload[offset:offset + 8])
    offset += 8
    if offset + model_len != len(payload):
        raise IntegrityError(f"{path}: checkpoint payload length mismatch")
    model = model_from_bytes(payload[offset:offset + model_len])
    return PoolState.from_dict(state_doc["state"]), model, state_doc["meta"]
