"""
Single source-of-truth for the package version.

The canonical value lives in ``pyproject.toml``; this helper reads it once so
run manifests, checkpoints and log lines agree on it. A missing or malformed
file falls back to "0.0.0" so an installed wheel without the source tree still
imports.
"""

from __future__ import annotations

import tomllib
from functools import lru_cache
from pathlib import Path

_PYPROJECT = Path(__file__).resolve().parents[2] / "pyproject.toml"


@lru_cache(maxsize=1)
def get_version() -> str:
    """
    Returns the package version as declared in pyproject.toml.

    Cached: the file is read once per process.
    """
    try:
        with _PYPROJECT.open("rb") as f:
            data = tomllib.load(f)
        version = data.get("project", {}).get("version")
        if isinstance(version, str) and version.strip():
            return version.strip()
    except (OSError, tomllib.TOMLDecodeError):
        pass
    return "0.0.0"


def artifact_version(content_digest: str) -> str:
    """
    Git-describe style artifact id: ``<version>+g<first 10 hex of digest>``.

    The digest is computed by the caller over the resolved config and input
    hashes, so two runs that would produce the same outputs share an id.
    """
    return f"{get_version()}+g{content_digest[:10]}"


__version__ = get_version()
