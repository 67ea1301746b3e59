"""Self-describing binary model files.

Layout: 8-byte magic, uint32 version, uint32 header length, JSON header
(kind, config, seed, epoch, loss history), then every state tensor as
little-endian float32 in declaration order (trainable parameters,
batch-norm running stats, Adam first then second moments). Round trips
are bit-exact because parameters live in float32 in memory too.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .models import ClassifierConfig, Model, TcnnConfig, build_dsqcnn, build_tcnn

MAGIC = b"RFFMODEL"
VERSION = 1


def save_model(model: Model, path: str | Path) -> None:
    header = json.dumps(
        {
            "kind": model.kind,
            "config": model.config_dict(),
            "seed": model.seed,
            "epoch": model.epoch,
            "adam_t": model.adam.t,
            "loss_history": model.loss_history,
        },
        sort_keys=True,
    ).encode()
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<II", VERSION, len(header)))
        f.write(header)
        for tensor in model.state_tensors():
            f.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_model(path: str | Path) -> Model:
    with open(path, "rb") as f:
        if f.read(8) != MAGIC:
            raise ValueError(f"{path} is not a model file")
        version, header_len = struct.unpack("<II", f.read(8))
        if version != VERSION:
            raise ValueError(f"unsupported model version {version}")
        header = json.loads(f.read(header_len))
        blob = f.read()

    cfg = header["config"]
    if header["kind"] == "dsqcnn":
        config = ClassifierConfig(**{**cfg, "conv_filters": tuple(cfg["conv_filters"])})
        model = build_dsqcnn(config, header["seed"])
    elif header["kind"] == "tcnn":
        config = TcnnConfig(**{**cfg, "hidden": tuple(cfg["hidden"])})
        model = build_tcnn(config, header["seed"])
    else:
        raise ValueError(f"unknown model kind {header['kind']!r}")

    offset = 0
    values = np.frombuffer(blob, dtype="<f4")
    for tensor in model.state_tensors():
        n = tensor.size
        tensor[...] = values[offset : offset + n].reshape(tensor.shape)
        offset += n
    if offset != values.size:
        raise ValueError("model blob size does not match the architecture")
    model.epoch = header["epoch"]
    model.adam.t = header["adam_t"]
    model.loss_history = list(header["loss_history"])
    return model
