"""Model directory format: ``manifest.json`` + ``weights.bin``.

``weights.bin`` is little-endian float64, layer by layer, each layer's
weight matrix (row-major, shape ``n_out x n_in``) followed by its bias.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..datasets.scaling import Scaler
from ..errors import DataError
from .model import DenseLayer, MlpModel
from .tensor import Tensor

FORMAT_VERSION = 1


def save_model(model: MlpModel, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format_version": FORMAT_VERSION,
        "n_inp": model.n_inp,
        "n_out": model.n_out,
        "head": model.head,
        "rng_seed": int(model.rng_seed),
        "layers": [
            {"n_in": l.n_in, "n_out": l.n_out, "activation": l.activation, "dropout_rate": l.dropout_rate}
            for l in model.layers
        ],
        "input_scaler": model.input_scaler.to_dict(),
        "output_scaler": model.output_scaler.to_dict(),
        "meta": model.meta,
    }
    (d / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    flat = np.concatenate([np.concatenate([l.weights.data.ravel(), l.bias.data]) for l in model.layers])
    (d / "weights.bin").write_bytes(flat.astype("<f8").tobytes())
    return d


def load_model(directory) -> MlpModel:
    d = Path(directory)
    try:
        manifest = json.loads((d / "manifest.json").read_text())
        raw = np.frombuffer((d / "weights.bin").read_bytes(), dtype="<f8").astype(np.float64)
    except FileNotFoundError as exc:
        raise DataError(f"model directory {d} is incomplete: {exc}") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise DataError(f"unsupported model format version {manifest.get('format_version')}")
    layers = []
    pos = 0
    for spec in manifest["layers"]:
        n_in, n_out = spec["n_in"], spec["n_out"]
        w = raw[pos : pos + n_in * n_out].reshape(n_out, n_in)
        pos += n_in * n_out
        b = raw[pos : pos + n_out]
        pos += n_out
        layers.append(DenseLayer(Tensor(w, requires_grad=True), Tensor(b, requires_grad=True),
                                 spec["activation"], spec["dropout_rate"]))
    if pos != raw.size:
        raise DataError(f"weights.bin holds {raw.size} values, manifest describes {pos}")
    return MlpModel(
        layers,
        manifest["n_inp"],
        manifest["n_out"],
        manifest["head"],
        Scaler.from_dict(manifest["input_scaler"]),
        Scaler.from_dict(manifest["output_scaler"]),
        manifest["rng_seed"],
        manifest.get("meta", {}),
    )
