"""Dataset loading for 28x28 grayscale digit images.

Prefers real MNIST when its files are present in the data directory (raw IDX
files, optionally gzipped, or an ``mnist.npz`` archive). When no MNIST files
are available the loader falls back to scikit-learn's bundled handwritten
digits upsampled to 28x28, so the full pipeline stays runnable offline. The
resolved dataset name travels with every result row.
"""

from __future__ import annotations

import gzip
import hashlib
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

DATA_DIR_ENV = "RDCLAB_DATA_DIR"

__all__ = ["Dataset", "load_dataset", "default_data_dir", "DATA_DIR_ENV"]


@dataclass(frozen=True)
class Dataset:
    name: str
    train_x: torch.Tensor  # (N, 1, 28, 28) float32 in [0, 1]
    train_y: torch.Tensor  # (N,) int64
    test_x: torch.Tensor
    test_y: torch.Tensor

    @property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        for t in (self.train_x, self.train_y, self.test_x, self.test_y):
            h.update(t.numpy().tobytes())
        return h.hexdigest()[:16]


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, Path.home() / ".cache" / "rdclab" / "data"))


def _read_idx(path: Path) -> np.ndarray:
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "rb") as f:
        raw = f.read()
    zero, dtype_code, ndim = struct.unpack(">HBB", raw[:4])
    if zero != 0 or dtype_code != 0x08:
        raise ValueError(f"unsupported IDX header in {path}")
    dims = struct.unpack(f">{ndim}I", raw[4 : 4 + 4 * ndim])
    data = np.frombuffer(raw, dtype=np.uint8, offset=4 + 4 * ndim)
    return data.reshape(dims)


def _find_idx(data_dir: Path, stem: str) -> Path | None:
    for name in (stem, stem + ".gz"):
        p = data_dir / name
        if p.exists():
            return p
    return None


def _load_mnist(data_dir: Path) -> Dataset | None:
    npz = data_dir / "mnist.npz"
    if npz.exists():
        with np.load(npz) as z:
            parts = (z["x_train"], z["y_train"], z["x_test"], z["y_test"])
        xtr, ytr, xte, yte = parts
    else:
        paths = [
            _find_idx(data_dir, "train-images-idx3-ubyte"),
            _find_idx(data_dir, "train-labels-idx1-ubyte"),
            _find_idx(data_dir, "t10k-images-idx3-ubyte"),
            _find_idx(data_dir, "t10k-labels-idx1-ubyte"),
        ]
        if any(p is None for p in paths):
            return None
        xtr, ytr, xte, yte = (_read_idx(p) for p in paths)
    to_x = lambda a: torch.from_numpy(
        (np.asarray(a, dtype=np.float32) / 255.0).reshape(-1, 1, 28, 28)
    )
    to_y = lambda a: torch.from_numpy(np.asarray(a, dtype=np.int64))
    return Dataset("mnist", to_x(xtr), to_y(ytr), to_x(xte), to_y(yte))


def _load_digits_fallback(test_fraction: float = 0.2, seed: int = 0) -> Dataset:
    from sklearn.datasets import load_digits
    from sklearn.model_selection import train_test_split

    digits = load_digits()
    x = digits.images.astype(np.float32) / 16.0  # (1797, 8, 8)
    y = digits.target.astype(np.int64)
    xtr, xte, ytr, yte = train_test_split(
        x, y, test_size=test_fraction, random_state=seed, stratify=y
    )

    def upsample(a: np.ndarray) -> torch.Tensor:
        t = torch.from_numpy(a).unsqueeze(1)
        t = F.interpolate(t, size=(28, 28), mode="bilinear", align_corners=False)
        return t.clamp(0.0, 1.0)

    return Dataset(
        "sklearn_digits_28x28",
        upsample(xtr),
        torch.from_numpy(ytr),
        upsample(xte),
        torch.from_numpy(yte),
    )


def load_dataset(data_dir: Path | str | None = None) -> Dataset:
    """Load MNIST if available in the data directory, else the fallback."""
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    if data_dir.exists():
        ds = _load_mnist(data_dir)
        if ds is not None:
            return ds
    return _load_digits_fallback()
