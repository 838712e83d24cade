"""
Resumable snapshot of a training run.

Stored as a directory: ``state.json`` (counters, RNG state, best score,
history rows) and ``state.bin`` (current parameters, Adam moments and the
best parameters, packed like a model checkpoint).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from prism.errors import CheckpointError
from prism.model.checkpoint import pack_arrays, unpack_arrays
from prism.utils.io import atomic_write_bytes, atomic_write_json, sha256_bytes

STATE_FILE = "state.json"
STATE_BLOB = "state.bin"
STATE_FORMAT = 1


@dataclass
class TrainState:
    """
    Everything needed to continue a run bit-identically after ``epoch`` epochs.
    """

    epoch: int
    step: int
    adam_t: int
    best_val_loss: float
    best_epoch: int
    bad_epochs: int
    rng_state: dict
    params: dict[str, np.ndarray]
    moments: dict[str, np.ndarray]
    best_params: dict[str, np.ndarray]
    history: list[dict] = field(default_factory=list)
    bits: int = 32

    def save(self, directory: Path | str) -> Path:
        target = Path(directory)
        arrays = {f"param/{k}": v for k, v in self.params.items()}
        arrays.update(self.moments)
        arrays.update({f"best/{k}": v for k, v in self.best_params.items()})
        blob, layout = pack_arrays(arrays, self.bits)
        atomic_write_bytes(target / STATE_BLOB, blob)
        atomic_write_json(
            target / STATE_FILE,
            {
                "format_version": STATE_FORMAT,
                "epoch": self.epoch,
                "step": self.step,
                "adam_t": self.adam_t,
                # JSON has no Infinity; an unset best is stored as null.
                "best_val_loss": self.best_val_loss if np.isfinite(self.best_val_loss) else None,
                "best_epoch": self.best_epoch,
                "bad_epochs": self.bad_epochs,
                "rng_state": self.rng_state,
                "history": self.history,
                "bits": self.bits,
                "layout": layout,
                "sha256": sha256_bytes(blob),
            },
        )
        return target

    @classmethod
    def load(cls, directory: Path | str) -> TrainState:
        source = Path(directory)
        meta_path, blob_path = source / STATE_FILE, source / STATE_BLOB
        if not meta_path.is_file() or not blob_path.is_file():
            raise CheckpointError(f"no training state in {source}")
        try:
            meta = json.loads(meta_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CheckpointError(f"{meta_path}: unreadable training state ({exc.msg})") from exc
        if meta.get("format_version") != STATE_FORMAT:
            raise CheckpointError(f"{meta_path}: unsupported state format")
        blob = blob_path.read_bytes()
        if sha256_bytes(blob) != meta["sha256"]:
            raise CheckpointError(f"{blob_path}: content hash does not match {STATE_FILE}")

        arrays = unpack_arrays(blob, meta["layout"], meta["bits"])
        params = {k.removeprefix("param/"): v for k, v in arrays.items() if k.startswith("param/")}
        best = {k.removeprefix("best/"): v for k, v in arrays.items() if k.startswith("best/")}
        moments = {k: v for k, v in arrays.items() if k.startswith(("m/", "v/"))}
        best_val = meta["best_val_loss"]
        return cls(
            epoch=meta["epoch"],
            step=meta["step"],
            adam_t=meta["adam_t"],
            best_val_loss=float("inf") if best_val is None else float(best_val),
            best_epoch=meta["best_epoch"],
            bad_epochs=meta["bad_epochs"],
            rng_state=meta["rng_state"],
            params=params,
            moments=moments,
            best_params=best,
            history=meta["history"],
            bits=meta["bits"],
        )
