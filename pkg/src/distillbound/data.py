"""Synthetic fixtures, label permutation and IDX ingestion."""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ShapeError

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


@dataclass
class Dataset:
    x_train: np.ndarray
    y_train: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    k: int
    meta: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.x_train.shape[0]

    @property
    def d(self):
        return self.x_train.shape[1]


def blob_centers(k, d, radius=0.7):
    """Centers on distinct rays from the origin, spread over the positive orthant.

    Distinct directions keep the classes separable by networks without biases.
    """
    if d == 1:
        return np.linspace(0.25, 0.75, k)[:, None]
    angles = np.linspace(0.0, math.pi / 2, k + 2)[1:-1]
    c = np.full((k, d), 0.15)
    c[:, 0] = 0.15 + radius * np.cos(angles)
    c[:, 1] = 0.15 + radius * np.sin(angles)
    return np.clip(c, 0.0, 1.0)


def synthetic_blobs(n_train, n_test, d=2, k=3, spread=0.06, seed=0):
    """``k`` Gaussian clusters clipped to ``[0, 1]^d``, balanced labels."""
    rng = np.random.default_rng(seed)
    centers = blob_centers(k, d)

    def draw(n):
        y = np.arange(n) % k
        rng.shuffle(y)
        x = np.clip(centers[y] + spread * rng.standard_normal((n, d)), 0.0, 1.0)
        return x, y

    xtr, ytr = draw(n_train)
    xte, yte = draw(n_test)
    meta = {"source": "synthetic_blobs", "n_train": n_train, "n_test": n_test, "d": d, "k": k,
            "spread": spread, "seed": seed}
    return Dataset(xtr, ytr, xte, yte, k, meta)


def synthetic_ring(n_train, n_test, inner=(0.05, 0.2), outer=(0.3, 0.45), seed=0):
    """Two concentric annuli around the cube center; class 0 is the inner one."""
    rng = np.random.default_rng(seed)

    def draw(n):
        y = np.arange(n) % 2
        rng.shuffle(y)
        lo = np.where(y == 0, inner[0], outer[0])
        hi = np.where(y == 0, inner[1], outer[1])
        rad = lo + (hi - lo) * rng.random(n)
        ang = 2 * math.pi * rng.random(n)
        x = 0.5 + rad[:, None] * np.stack([np.cos(ang), np.sin(ang)], 1)
        return x, y

    xtr, ytr = draw(n_train)
    xte, yte = draw(n_test)
    meta = {"source": "synthetic_ring", "n_train": n_train, "n_test": n_test, "d": 2, "k": 2, "seed": seed}
    return Dataset(xtr, ytr, xte, yte, 2, meta)


def permute_labels(y, fraction, seed=0):
    """Cyclically shift the labels of ``floor(fraction * n)`` randomly chosen positions.

    Returns the new labels and the sorted moved positions; all other
    positions keep their labels.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must lie in [0, 1]")
    y = np.asarray(y).copy()
    count = int(math.floor(fraction * len(y)))
    rng = np.random.default_rng(seed)
    pos = rng.permutation(len(y))[:count]
    if count > 1:
        y[pos] = y[np.roll(pos, -1)]
    return y, np.sort(pos)


def _read_idx(path, expect_magic):
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 8:
        raise ParseError(f"{path}: too short for an IDX header")
    magic = struct.unpack(">I", raw[:4])[0]
    if magic != expect_magic:
        raise ParseError(f"{path}: bad magic 0x{magic:08x}, expected 0x{expect_magic:08x}")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise ParseError(f"{path}: truncated dimension header")
    dims = struct.unpack(f">{ndim}I", raw[4:header])
    size = int(np.prod(dims))
    if len(raw) - header != size:
        raise ParseError(f"{path}: payload has {len(raw) - header} bytes, header declares {size}")
    return np.frombuffer(raw, dtype=np.uint8, offset=header).reshape(dims)


def load_idx(images_path, labels_path):
    """Images as rows scaled to ``[0, 1]`` and labels as int64."""
    images = _read_idx(images_path, IDX_IMAGES)
    labels = _read_idx(labels_path, IDX_LABELS)
    if images.shape[0] != labels.shape[0]:
        raise ShapeError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    x = images.reshape(images.shape[0], -1).astype(np.float64) / 255.0
    return x, labels.astype(np.int64)


def write_idx(path, array):
    """Write a uint8 array in IDX format (images if 3-D, labels if 1-D)."""
    a = np.ascontiguousarray(array, dtype=np.uint8)
    magic = 0x00000800 | a.ndim
    with open(path, "wb") as fh:
        fh.write(struct.pack(">I", magic))
        fh.write(struct.pack(f">{a.ndim}I", *a.shape))
        fh.write(a.tobytes())


def idx_dataset(images_path, labels_path, n_train, n_test=None, k=None):
    x, y = load_idx(images_path, labels_path)
    n_test = x.shape[0] - n_train if n_test is None else n_test
    if n_train + n_test > x.shape[0]:
        raise ValueError("requested split exceeds the file's example count")
    k = int(y.max()) + 1 if k is None else k
    meta = {"source": "idx_files", "images": str(images_path), "labels": str(labels_path),
            "n_train": n_train, "n_test": n_test, "k": k}
    return Dataset(x[:n_train], y[:n_train], x[n_train:n_train + n_test], y[n_train:n_train + n_test], k, meta)
