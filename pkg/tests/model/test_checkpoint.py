import json
import shutil
import tempfile
import unittest
from pathlib import Path

import numpy as np

from prism.errors import CheckpointError
from prism.model import PrismConfig, PrismModel, load_checkpoint, save_checkpoint
from prism.model.checkpoint import BLOB_FILE, MANIFEST_FILE, pack_arrays, unpack_arrays


def _model(bits: int = 32, seed: int = 7) -> PrismModel:
    cfg = PrismConfig(lookback=32, horizon=4, patch_len=8, patch_stride=4, d_model=16, n_heads=2, n_primitives=4)
    return PrismModel(cfg, seed=seed, bits=bits)


class TestCheckpoint(unittest.TestCase):
    """
    Manifest + little-endian blob persistence of model parameters.
    """

    def setUp(self):
        """
        Create a scratch directory.
        """
        self.tmp = Path(tempfile.mkdtemp())

    def tearDown(self):
        """
        Remove the scratch directory.
        """
        shutil.rmtree(self.tmp, ignore_errors=True)

    def test_roundtrip_is_bit_exact(self):
        """
        Saving and loading preserves every scalar at both precisions.
        """
        for bits in (32, 64):
            model = _model(bits)
            loaded = load_checkpoint(save_checkpoint(model, self.tmp / f"ckpt{bits}"))
            self.assertEqual(loaded.config, model.config)
            self.assertEqual(loaded.bits, bits)
            for name, tensor in model.params.items():
                self.assertEqual(loaded.params[name].data.tobytes(), tensor.data.tobytes(), name)

    def test_manifest_contents(self):
        """
        The manifest lists parameters in blob order with shapes, precision and hash.
        """
        model = _model()
        directory = save_checkpoint(model, self.tmp / "ckpt", extra={"epoch": 3})
        manifest = json.loads((directory / MANIFEST_FILE).read_text(encoding="utf-8"))
        self.assertEqual(manifest["format_version"], 1)
        self.assertEqual(manifest["precision"], 32)
        self.assertEqual([p["name"] for p in manifest["parameters"]], list(model.params))
        self.assertEqual(manifest["parameter_count"], model.parameter_count())
        self.assertEqual(manifest["extra"], {"epoch": 3})
        blob = (directory / BLOB_FILE).read_bytes()
        self.assertEqual(len(blob), 4 * model.parameter_count())
        first = model.params["embed.W_p"].data.reshape(-1)[0]
        self.assertEqual(blob[:4], np.asarray(first, dtype="<f4").tobytes())

    def test_corrupted_blob(self):
        """
        A blob whose hash no longer matches is rejected.
        """
        directory = save_checkpoint(_model(), self.tmp / "ckpt")
        blob = bytearray((directory / BLOB_FILE).read_bytes())
        blob[10] ^= 0xFF
        (directory / BLOB_FILE).write_bytes(bytes(blob))
        with self.assertRaises(CheckpointError):
            load_checkpoint(directory)

    def test_missing_checkpoint(self):
        """
        Loading from an empty directory is a checkpoint error.
        """
        with self.assertRaises(CheckpointError):
            load_checkpoint(self.tmp)

    def test_pack_layout_mismatch(self):
        """
        Unpacking with a layout that needs more bytes than the blob holds fails.
        """
        blob, layout = pack_arrays({"a": np.ones((2, 3))}, 64)
        self.assertEqual(unpack_arrays(blob, layout, 64)["a"].shape, (2, 3))
        with self.assertRaises(CheckpointError):
            unpack_arrays(blob, [{"name": "a", "shape": [3, 3]}], 64)


if __name__ == "__main__":
    unittest.main()
