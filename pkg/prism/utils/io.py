"""
Atomic file writers and content hashing for every artifact the CLI emits.

All writers go through a temp file in the destination directory followed by
``Path.replace`` so a crash mid-write never leaves a truncated checkpoint,
history or report behind.
"""

import hashlib
import json
import os
import tempfile
from collections.abc import Callable
from contextlib import suppress
from pathlib import Path
from typing import IO

import pandas as pd


def _atomic_write(path: Path | str, mode: str, write: Callable[[IO], None], **open_kwargs) -> Path:
    """
    Run ``write(handle)`` against a temp file, then swap it over ``path``.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=f".{target.name}.", suffix=".tmp")
    tmp_path = Path(tmp)
    try:
        with os.fdopen(fd, mode, **open_kwargs) as handle:
            write(handle)
        tmp_path.replace(target)
    except BaseException:
        with suppress(OSError):
            tmp_path.unlink()
        raise
    return target


def atomic_write_bytes(path: Path | str, payload: bytes) -> Path:
    """
    Write raw bytes (checkpoint blobs, optimizer moments) atomically.
    """
    return _atomic_write(path, "wb", lambda handle: handle.write(payload))


def atomic_write_json(path: Path | str, document: object) -> Path:
    """
    Write a JSON document with sorted keys and a trailing newline.

    Sorted keys keep the bytes stable across runs, so re-running a command
    from its manifest reproduces identical files.
    """
    text = json.dumps(document, indent=2, sort_keys=True, allow_nan=False) + "\n"
    return _atomic_write(
        path, "w", lambda handle: handle.write(text), encoding="utf-8", newline=""
    )


def atomic_to_csv(df: pd.DataFrame, filepath: str | Path, **to_csv_kwargs) -> Path:
    """
    Write ``df`` to ``filepath`` atomically.

    Args:
        df: The DataFrame to serialize.
        filepath: Destination CSV path.
        **to_csv_kwargs: Forwarded to ``DataFrame.to_csv`` (index, float_format, ...).
    """
    encoding = to_csv_kwargs.pop("encoding", "utf-8")
    return _atomic_write(
        filepath,
        "w",
        lambda handle: df.to_csv(handle, **to_csv_kwargs),
        encoding=encoding,
        newline="",
    )


def sha256_bytes(payload: bytes) -> str:
    """
    Hex SHA-256 digest of an in-memory payload.
    """
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path: Path | str, chunk_size: int = 1 << 20) -> str:
    """
    Hex SHA-256 digest of a file, streamed in chunks.
    """
    digest = hashlib.sha256()
    with Path(path).open("rb") as handle:
        for chunk in iter(lambda: handle.read(chunk_size), b""):
            digest.update(chunk)
    return digest.hexdigest()
