"""
Run manifests: one ``run_manifest.json`` per command output directory.

A manifest records the command line, the fully resolved configuration, the
hash of every input and output file and an artifact version derived from the
config and input hashes. Re-running ``argv`` against the same inputs
reproduces the listed output hashes, except for the manifest's own timings.
"""

from __future__ import annotations

import json
import time
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import UTC, datetime
from pathlib import Path

from pydantic import BaseModel, ConfigDict

from prism.utils.io import atomic_write_json, sha256_bytes, sha256_file
from prism.utils.logger import get_logger, log_safe
from prism.utils.version import artifact_version, get_version

logger = get_logger(__name__)

MANIFEST_FILE = "run_manifest.json"


class RunManifest(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    command: str
    argv: list[str]
    config: dict
    inputs: dict[str, str]
    outputs: dict[str, str]
    artifact_version: str
    prism_version: str
    seed: int | None
    timings: dict[str, str | float]

    def write(self, directory: Path | str) -> Path:
        return atomic_write_json(Path(directory) / MANIFEST_FILE, self.model_dump(mode="json"))

    @classmethod
    def read(cls, directory: Path | str) -> RunManifest:
        path = Path(directory) / MANIFEST_FILE
        return cls.model_validate_json(path.read_text(encoding="utf-8"))


@dataclass
class RunRecord:
    """
    What a command reports back for its manifest.
    """

    config: dict
    inputs: list[Path] = field(default_factory=list)
    seed: int | None = None


@dataclass
class RunClock:
    started: datetime = field(default_factory=lambda: datetime.now(UTC))
    t0: float = field(default_factory=time.perf_counter)

    def timings(self) -> dict[str, str | float]:
        return {
            "started": self.started.isoformat(),
            "finished": datetime.now(UTC).isoformat(),
            "wall_seconds": round(time.perf_counter() - self.t0, 3),
        }


def _output_hashes(directory: Path) -> dict[str, str]:
    return {
        path.relative_to(directory).as_posix(): sha256_file(path)
        for path in sorted(directory.rglob("*"))
        if path.is_file() and path.name != MANIFEST_FILE and not path.name.startswith(".")
    }


def build_manifest(
    command: str,
    argv: Sequence[str],
    record: RunRecord,
    out_dir: Path,
    clock: RunClock,
) -> RunManifest:
    inputs = {str(path): sha256_file(path) for path in record.inputs}
    digest = sha256_bytes(
        json.dumps({"command": command, "config": record.config, "inputs": inputs}, sort_keys=True).encode(
            "utf-8"
        )
    )
    return RunManifest(
        command=command,
        argv=list(argv),
        config=record.config,
        inputs=inputs,
        outputs=_output_hashes(out_dir),
        artifact_version=artifact_version(digest),
        prism_version=get_version(),
        seed=record.seed,
        timings=clock.timings(),
    )


def write_manifest(
    command: str, argv: Sequence[str], record: RunRecord, out_dir: Path | str, clock: RunClock
) -> Path:
    target = Path(out_dir)
    manifest = build_manifest(command, argv, record, target, clock)
    path = manifest.write(target)
    logger.debug("Run manifest %s written to %s", manifest.artifact_version, log_safe(path))
    return path
