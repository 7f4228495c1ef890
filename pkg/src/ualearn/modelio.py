"""Versioned binary model checkpoints (magic "UALB").

Layout: magic, u32 version, u32 header length, JSON header (architecture,
prior, tensor shapes), float64 tensor payload in canonical order, sha256
trailer over everything preceding it. ViT models add a "VIT1" section tag
in the header and prepend their trunk tensors to the payload.
"""

import hashlib
import io
import json
import struct

import numpy as np

from .bayes.classifier import BayesianClassifier
from .bayes.variational import PriorSpec, VariationalLayer
from .core import Tensor
from .errors import IntegrityError, ParseError

MAGIC = b"UALB"
VERSION = 1


def _classifier_tensors(clf):
    out = []
    for layer in clf.layers:
        out += [layer.w_mu, layer.w_rho, layer.b_mu, layer.b_rho]
        if layer.low_rank:
            out += [layer.w_factor, layer.b_factor]
    return out


def _classifier_meta(clf):
    dims = [clf.layers[0].fan_in] + [l.fan_out for l in clf.layers]
    return {
        "dims": dims,
        "activations": list(clf.activations),
        "posterior_kind": clf.posterior_kind,
        "rank": clf.rank,
        "class_count": clf.class_count,
        "prior": {
            "kind": clf.prior.kind,
            "sigma": clf.prior.sigma,
            "layer_sigmas": clf.prior.layer_sigmas,
            "learn_layer_sigmas": clf.prior.learn_layer_sigmas,
        },
    }


def _rebuild_classifier(meta, tensors):
    prior = PriorSpec(**meta["prior"])
    dims = meta["dims"]
    low_rank = meta["posterior_kind"] == "low_rank"
    layers = []
    it = iter(tensors)
    for i in range(len(dims) - 1):
        w_mu, w_rho, b_mu, b_rho = next(it), next(it), next(it), next(it)
        layer = VariationalLayer(w_mu, w_rho, b_mu, b_rho, dims[i], dims[i + 1])
        if low_rank:
            layer.w_factor = next(it)
            layer.b_factor = next(it)
        layers.append(layer)
    return BayesianClassifier(layers, list(meta["activations"]), prior,
                              meta["class_count"],
                              posterior_kind=meta["posterior_kind"],
                              rank=meta["rank"])


def model_to_bytes(model):
    from .vit import VitModel

    if isinstance(model, VitModel):
        cfg = model.config
        header = {
            "kind": "vit",
            "section": "VIT1",
            "vit": {
                "image_size": list(cfg.image_size),
                "patch_size": cfg.patch_size,
                "embed_dim": cfg.embed_dim,
                "heads": cfg.heads,
                "depth": cfg.depth,
                "mlp_ratio": cfg.mlp_ratio,
                "head_hidden": list(cfg.head_hidden),
                "head_activations": list(cfg.head_activations),
                "class_count": cfg.class_count,
            },
            "head": _classifier_meta(model.head),
        }
        tensors = model.trunk_parameters() + _classifier_tensors(model.head)
    elif isinstance(model, BayesianClassifier):
        header = {"kind": "classifier", **_classifier_meta(model)}
        tensors = _classifier_tensors(model)
    else:
        raise TypeError(f"cannot checkpoint {type(model).__name__}")
    header["tensor_shapes"] = [list(t.shape) for t in tensors]

    buf = io.BytesIO()
    buf.write(MAGIC)
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    buf.write(struct.pack("<II", VERSION, len(raw_header)))
    buf.write(raw_header)
    for t in tensors:
        buf.write(np.ascontiguousarray(t.data, dtype="<f8").tobytes())
    payload = buf.getvalue()
    return payload + hashlib.sha256(payload).digest()


def model_from_bytes(blob):
    if len(blob) < 44:
        raise IntegrityError("model blob too short")
    payload, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(payload).digest() != digest:
        raise IntegrityError("model checksum mismatch")
    if payload[:4] != MAGIC:
        raise ParseError("not a UALB model blob")
    version, header_len = struct.unpack("<II", payload[4:12])
    if version != VERSION:
        raise ParseError(f"unsupported model version {version}")
    header = json.loads(payload[12:12 + header_len].decode("utf-8"))
    offset = 12 + header_len
    tensors = []
    for shape in header["tensor_shapes"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + 8 * count
        if end > len(payload):
            raise IntegrityError("model blob truncated in tensor payload")
        arr = np.frombuffer(payload[offset:end], dtype="<f8").reshape(shape).copy()
        tensors.append(Tensor(arr, requires_grad=True))
        offset = end
    if offset != len(payload):
        raise IntegrityError("trailing bytes in model payload")

    if header["kind"] == "classifier":
        return _rebuild_classifier(header, tensors)
    if header["kind"] == "vit":
        from .vit import EncoderBlock, VitConfig, VitModel

        v = header["vit"]
        cfg = VitConfig(image_size=tuple(v["image_size"]), patch_size=v["patch_size"],
                        embed_dim=v["embed_dim"], heads=v["heads"], depth=v["depth"],
                        mlp_ratio=v["mlp_ratio"], head_hidden=tuple(v["head_hidden"]),
                        head_activations=tuple(v["head_activations"]),
                        class_count=v["class_count"])
        n_block = len(EncoderBlock.__dataclass_fields__)
        it = iter(tensors)
        projection, positional, class_token = next(it), next(it), next(it)
        blocks = [EncoderBlock(*(next(it) for _ in range(n_block)))
                  for _ in range(cfg.depth)]
        final_gain, final_bias = next(it), next(it)
        head = _rebuild_classifier(header["head"], list(it))
        return VitModel(cfg, projection, positional, class_token, blocks,
                        final_gain, final_bias, head)
    raise ParseError(f"unknown model kind {header['kind']!r}")


def save_model(model, path):
    with open(path, "wb") as fh:
        fh.write(model_to_bytes(model))


def load_model(path):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read())
