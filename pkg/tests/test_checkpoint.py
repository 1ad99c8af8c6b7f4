import struct

import numpy as np
import pytest

from models import FORMAT_VERSION, MAGIC, CheckpointError, load_classifier, save_classifier
from models.checkpoint import KIND_CLASSIFIER, read_checkpoint, write_checkpoint


def test_classifier_checkpoint_restores_parameters(tmp_path, classifier):
    path = tmp_path / "clf.bin"
    save_classifier(classifier, path, extra={"config_hash": "abc", "labels": {"pos": 0}})
    loaded, meta = load_classifier(path)
    for name, arr in classifier.arrays().items():
        np.testing.assert_array_equal(getattr(loaded, name), arr)
    assert meta["config_hash"] == "abc"
    assert meta["labels"] == {"pos": 0}
    assert meta["C"] == classifier.C


def test_header_layout(tmp_path):
    path = tmp_path / "x.bin"
    write_checkpoint(path, KIND_CLASSIFIER, {"a": 1}, [("w", np.arange(3.0))])
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert struct.unpack("<I", raw[4:8])[0] == FORMAT_VERSION
    meta, arrays = read_checkpoint(path, KIND_CLASSIFIER)
    assert meta["a"] == 1
    np.testing.assert_array_equal(arrays["w"], [0.0, 1.0, 2.0])
    assert raw.endswith(np.arange(3.0).astype("<f8").tobytes())


def _corrupt(path, data):
    path.write_bytes(data)
    with pytest.raises(CheckpointError, match="incompatible checkpoint"):
        read_checkpoint(path, KIND_CLASSIFIER)


def test_rejects_damaged_files(tmp_path):
    good = tmp_path / "good.bin"
    write_checkpoint(good, KIND_CLASSIFIER, {}, [("w", np.ones((2, 2)))])
    raw = good.read_bytes()
    bad = tmp_path / "bad.bin"

    _corrupt(bad, b"XXXX" + raw[4:])
    _corrupt(bad, raw[:4] + struct.pack("<I", FORMAT_VERSION + 1) + raw[8:])
    _corrupt(bad, raw[:-8])
    _corrupt(bad, raw + b"\x00")
    _corrupt(bad, raw[:6])


def test_rejects_other_kind(tmp_path):
    path = tmp_path / "x.bin"
    write_checkpoint(path, "mlm", {}, [])
    with pytest.raises(CheckpointError):
        read_checkpoint(path, KIND_CLASSIFIER)


def test_checkpoint_error_is_runtime_error():
    assert issubclass(CheckpointError, RuntimeError)
    assert not issubclass(CheckpointError, ValueError)
