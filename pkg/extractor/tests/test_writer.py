from __future__ import annotations

import struct

import numpy as np
import pytest

from cue_extractor.writer import write_float_matrix, write_label_vector, write_manifest


def test_float_matrix_byte_layout(tmp_path):
    path = tmp_path / "m.cuet"
    write_float_matrix(path, np.array([[1.5, -2.0]], dtype=np.float32))
    data = path.read_bytes()
    magic, version, rows, dims = struct.unpack_from("<4sIII", data)
    assert magic == b"CUET"
    assert version == 1
    assert (rows, dims) == (1, 2)
    assert data[16:] == np.array([1.5, -2.0], dtype="<f4").tobytes()


def test_label_vector_byte_layout(tmp_path):
    path = tmp_path / "l.cuet"
    write_label_vector(path, np.array([3, 0, 7]))
    data = path.read_bytes()
    magic, version, rows, dims = struct.unpack_from("<4sIII", data)
    assert (magic, version, rows, dims) == (b"CUET", 1, 3, 1)
    assert data[16:] == np.array([3, 0, 7], dtype="<u4").tobytes()


def test_rejects_bad_shapes(tmp_path):
    with pytest.raises(ValueError):
        write_float_matrix(tmp_path / "x.cuet", np.zeros(3))
    with pytest.raises(ValueError):
        write_label_vector(tmp_path / "y.cuet", np.zeros((2, 2)))
    with pytest.raises(ValueError):
        write_label_vector(tmp_path / "z.cuet", np.array([-1]))


def test_files_read_back_through_the_training_toolkit(tmp_path):
    # the byte format is the contract between the two packages
    from cuekit.tensorio import read_labels, read_tensor

    matrix = np.random.default_rng(0).normal(size=(4, 3)).astype(np.float32)
    write_float_matrix(tmp_path / "m.cuet", matrix)
    assert read_tensor(tmp_path / "m.cuet").tobytes() == matrix.tobytes()

    labels = np.array([0, 2, 1])
    write_label_vector(tmp_path / "l.cuet", labels)
    assert np.array_equal(read_labels(tmp_path / "l.cuet"), labels)


def test_manifest_schema(tmp_path):
    import json

    write_manifest(
        tmp_path / "m.json",
        classes=["a", "b"],
        features_path="f.cuet",
        prototypes_path="p.cuet",
        labels_path="l.cuet",
        d=4,
        n=10,
        source="test",
    )
    doc = json.loads((tmp_path / "m.json").read_text())
    assert set(doc) == {
        "classes", "features_path", "prototypes_path", "labels_path", "d", "n", "source",
    }
    assert doc["d"] == 4 and doc["n"] == 10
