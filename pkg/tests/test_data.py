import gzip
import struct

import numpy as np
import pytest
import torch

from rdclab.data import DATA_DIR_ENV, default_data_dir, load_dataset


def _write_idx(path, array: np.ndarray, compress=False):
    header = struct.pack(">HBB", 0, 0x08, array.ndim)
    header += struct.pack(f">{array.ndim}I", *array.shape)
    payload = header + array.astype(np.uint8).tobytes()
    if compress:
        path = path.with_suffix(path.suffix + ".gz")
        path.write_bytes(gzip.compress(payload))
    else:
        path.write_bytes(payload)


def _write_mnist_idx(data_dir, n_train=12, n_test=5, compress=False):
    rng = np.random.default_rng(0)
    _write_idx(
        data_dir / "train-images-idx3-ubyte",
        rng.integers(0, 256, size=(n_train, 28, 28)), compress,
    )
    _write_idx(
        data_dir / "train-labels-idx1-ubyte",
        rng.integers(0, 10, size=(n_train,)), compress,
    )
    _write_idx(
        data_dir / "t10k-images-idx3-ubyte",
        rng.integers(0, 256, size=(n_test, 28, 28)), compress,
    )
    _write_idx(
        data_dir / "t10k-labels-idx1-ubyte",
        rng.integers(0, 10, size=(n_test,)), compress,
    )


class TestFallback:
    def test_shapes_and_ranges(self, tmp_path):
        ds = load_dataset(tmp_path / "empty")
        assert ds.name == "sklearn_digits_28x28"
        assert ds.train_x.shape[1:] == (1, 28, 28)
        assert ds.test_x.shape[1:] == (1, 28, 28)
        assert ds.train_x.dtype == torch.float32
        assert ds.train_y.dtype == torch.int64
        assert float(ds.train_x.min()) >= 0.0
        assert float(ds.train_x.max()) <= 1.0
        assert 0 <= int(ds.train_y.min()) and int(ds.train_y.max()) <= 9

    def test_split_sizes_disjoint_stratified(self, tmp_path):
        ds = load_dataset(tmp_path / "empty")
        n = len(ds.train_y) + len(ds.test_y)
        assert n == 1797
        assert len(ds.test_y) == pytest.approx(0.2 * n, abs=1)
        # stratified: every class present in both splits
        for split in (ds.train_y, ds.test_y):
            assert set(split.tolist()) == set(range(10))

    def test_deterministic(self, tmp_path):
        a = load_dataset(tmp_path / "empty")
        b = load_dataset(tmp_path / "empty")
        assert a.content_hash == b.content_hash


class TestMnistFiles:
    @pytest.mark.parametrize("compress", [False, True])
    def test_idx_loading(self, tmp_path, compress):
        _write_mnist_idx(tmp_path, compress=compress)
        ds = load_dataset(tmp_path)
        assert ds.name == "mnist"
        assert ds.train_x.shape == (12, 1, 28, 28)
        assert ds.test_x.shape == (5, 1, 28, 28)
        assert float(ds.train_x.max()) <= 1.0

    def test_npz_loading(self, tmp_path):
        rng = np.random.default_rng(1)
        np.savez(
            tmp_path / "mnist.npz",
            x_train=rng.integers(0, 256, size=(8, 28, 28), dtype=np.uint8),
            y_train=rng.integers(0, 10, size=(8,), dtype=np.uint8),
            x_test=rng.integers(0, 256, size=(3, 28, 28), dtype=np.uint8),
            y_test=rng.integers(0, 10, size=(3,), dtype=np.uint8),
        )
        ds = load_dataset(tmp_path)
        assert ds.name == "mnist"
        assert ds.train_x.shape == (8, 1, 28, 28)

    def test_idx_matches_raw_pixels(self, tmp_path):
        img = np.zeros((1, 28, 28), dtype=np.uint8)
        img[0, 3, 4] = 255
        _write_idx(tmp_path / "train-images-idx3-ubyte", img)
        _write_idx(tmp_path / "train-labels-idx1-ubyte", np.array([7], dtype=np.uint8))
        _write_idx(tmp_path / "t10k-images-idx3-ubyte", img)
        _write_idx(tmp_path / "t10k-labels-idx1-ubyte", np.array([7], dtype=np.uint8))
        ds = load_dataset(tmp_path)
        assert ds.train_x[0, 0, 3, 4].item() == pytest.approx(1.0)
        assert ds.train_x.sum().item() == pytest.approx(1.0)
        assert ds.train_y[0].item() == 7

    def test_partial_files_fall_back(self, tmp_path):
        _write_idx(
            tmp_path / "train-images-idx3-ubyte",
            np.zeros((2, 28, 28), dtype=np.uint8),
        )
        assert load_dataset(tmp_path).name == "sklearn_digits_28x28"


def test_default_data_dir_env(monkeypatch, tmp_path):
    monkeypatch.setenv(DATA_DIR_ENV, str(tmp_path / "custom"))
    assert default_data_dir() == tmp_path / "custom"
