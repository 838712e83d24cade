"""
On-disk model checkpoints.

A checkpoint is a directory holding ``manifest.json`` (format version,
``PrismConfig``, precision, seed, named parameter list with shapes and the
blob's SHA-256) and ``params.bin``, every parameter flattened little-endian
in manifest order. Loading reproduces each scalar bit for bit.
"""

from __future__ import annotations

import json
from collections.abc import Mapping
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from prism.errors import CheckpointError, ConfigError
from prism.model.config import PrismConfig
from prism.model.network import PrismModel
from prism.utils.io import atomic_write_bytes, atomic_write_json, sha256_bytes
from prism.utils.logger import get_logger, log_safe
from prism.utils.version import get_version

logger = get_logger(__name__)

FORMAT_VERSION = 1
MANIFEST_FILE = "manifest.json"
BLOB_FILE = "params.bin"


def blob_dtype(bits: int) -> np.dtype:
    return np.dtype("<f4") if bits == 32 else np.dtype("<f8")


def pack_arrays(arrays: Mapping[str, np.ndarray], bits: int) -> tuple[bytes, list[dict]]:
    """
    Concatenate ``arrays`` into one little-endian blob plus its layout entries.
    """
    dtype = blob_dtype(bits)
    layout = [{"name": name, "shape": list(values.shape)} for name, values in arrays.items()]
    flat = [np.ascontiguousarray(values, dtype=dtype).reshape(-1) for values in arrays.values()]
    blob = np.concatenate(flat).tobytes() if flat else b""
    return blob, layout


def unpack_arrays(blob: bytes, layout: list[dict], bits: int) -> dict[str, np.ndarray]:
    """
    Split a blob written by ``pack_arrays`` back into named native-endian arrays.
    """
    dtype = blob_dtype(bits)
    expected = sum(int(np.prod(entry["shape"])) for entry in layout) * dtype.itemsize
    if len(blob) != expected:
        raise CheckpointError(f"blob holds {len(blob)} bytes, layout needs {expected}")
    flat = np.frombuffer(blob, dtype=dtype)
    native = dtype.newbyteorder("=")
    arrays: dict[str, np.ndarray] = {}
    offset = 0
    for entry in layout:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape))
        arrays[entry["name"]] = flat[offset : offset + count].reshape(shape).astype(native)
        offset += count
    return arrays


def save_checkpoint(model: PrismModel, directory: Path | str, extra: dict | None = None) -> Path:
    """
    Write ``model`` to ``directory`` (created if missing) and return the directory.

    The blob is written before the manifest, so a manifest on disk always
    describes a complete blob.
    """
    target = Path(directory)
    blob, layout = pack_arrays(model.state_arrays(), model.bits)
    atomic_write_bytes(target / BLOB_FILE, blob)
    manifest = {
        "format_version": FORMAT_VERSION,
        "prism_version": get_version(),
        "config": model.config.model_dump(),
        "precision": model.bits,
        "seed": model.seed,
        "parameters": layout,
        "parameter_count": model.parameter_count(),
        "sha256": sha256_bytes(blob),
        "extra": extra or {},
    }
    atomic_write_json(target / MANIFEST_FILE, manifest)
    logger.debug("Checkpoint written to %s", log_safe(target))
    return target


def read_manifest(directory: Path | str) -> dict:
    path = Path(directory) / MANIFEST_FILE
    if not path.is_file():
        raise CheckpointError(f"no checkpoint manifest at {path}")
    try:
        manifest = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: unreadable manifest ({exc.msg})") from exc
    if manifest.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: format version {manifest.get('format_version')!r}, expected {FORMAT_VERSION}"
        )
    return manifest


def load_checkpoint(directory: Path | str) -> PrismModel:
    """
    Rebuild the model stored in ``directory``, verifying the blob hash and layout.
    """
    source = Path(directory)
    manifest = read_manifest(source)
    blob_path = source / BLOB_FILE
    if not blob_path.is_file():
        raise CheckpointError(f"checkpoint blob missing: {blob_path}")
    blob = blob_path.read_bytes()
    if sha256_bytes(blob) != manifest["sha256"]:
        raise CheckpointError(f"{blob_path}: content hash does not match the manifest")

    try:
        config = PrismConfig.model_validate(manifest["config"])
    except (ValidationError, ConfigError) as exc:
        raise CheckpointError(f"{source}: stored config is invalid: {exc}") from exc
    bits = int(manifest["precision"])
    model = PrismModel(config, seed=int(manifest.get("seed", 0)), bits=bits)
    arrays = unpack_arrays(blob, manifest["parameters"], bits)
    expected = {name: p.shape for name, p in model.params.items()}
    stored = {name: values.shape for name, values in arrays.items()}
    if list(stored.items()) != list(expected.items()):
        raise CheckpointError(f"{source}: parameter layout does not match the stored config")
    model.load_state_arrays(arrays)
    return model
