import json
import shutil
import tempfile
import unittest
from pathlib import Path
from unittest.mock import patch

import pandas as pd

from prism.utils.io import atomic_to_csv, atomic_write_bytes, atomic_write_json, sha256_bytes, sha256_file


class TestAtomicWriters(unittest.TestCase):
    """
    Temp-file-and-replace writers and content hashes.
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

    def test_json_is_sorted_and_stable(self):
        """
        Key order of the input does not change the bytes written.
        """
        first = atomic_write_json(self.tmp / "a.json", {"b": 1, "a": [1.5, None]})
        second = atomic_write_json(self.tmp / "b.json", {"a": [1.5, None], "b": 1})
        self.assertEqual(first.read_bytes(), second.read_bytes())
        self.assertEqual(json.loads(first.read_text(encoding="utf-8")), {"a": [1.5, None], "b": 1})

    def test_json_rejects_nan(self):
        """
        NaN is not JSON; the write fails and leaves no file or temp file behind.
        """
        with self.assertRaises(ValueError):
            atomic_write_json(self.tmp / "bad.json", {"loss": float("nan")})
        self.assertEqual(list(self.tmp.iterdir()), [])

    def test_creates_parent_directories(self):
        """
        Nested targets get their directories created.
        """
        path = atomic_write_bytes(self.tmp / "run" / "best" / "params.bin", b"\x01\x02")
        self.assertEqual(path.read_bytes(), b"\x01\x02")

    def test_failed_replace_keeps_previous_file(self):
        """
        A failure while swapping leaves the old content and cleans up the temp file.
        """
        target = atomic_write_bytes(self.tmp / "blob.bin", b"old")
        with patch.object(Path, "replace", side_effect=OSError("disk full")), self.assertRaises(OSError):
            atomic_write_bytes(target, b"new")
        self.assertEqual(target.read_bytes(), b"old")
        self.assertEqual([p.name for p in self.tmp.iterdir()], ["blob.bin"])

    def test_csv_roundtrip(self):
        """
        DataFrames are written as UTF-8 CSV with the forwarded options.
        """
        frame = pd.DataFrame({"variant": ["full", "w/o-patch"], "mse": [0.1, 0.123456789]})
        path = atomic_to_csv(frame, self.tmp / "table.csv", index=False, float_format="%.4g")
        self.assertEqual(path.read_text(encoding="utf-8").splitlines()[2], "w/o-patch,0.1235")

    def test_hashes_agree(self):
        """
        Hashing a file streams to the same digest as hashing its bytes.
        """
        payload = bytes(range(256)) * 10
        path = atomic_write_bytes(self.tmp / "payload.bin", payload)
        self.assertEqual(sha256_file(path, chunk_size=100), sha256_bytes(payload))


if __name__ == "__main__":
    unittest.main()
