"""
The ``prism`` command line: run configs, manifests and the command dispatcher.
"""

from prism.cli.config import DataConfig, RunConfig, load_config, read_json
from prism.cli.main import main
from prism.cli.manifest import MANIFEST_FILE, RunManifest

__all__ = ["MANIFEST_FILE", "DataConfig", "RunConfig", "RunManifest", "load_config", "main", "read_json"]
