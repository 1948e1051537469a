"""Desk-scale datasets: synthetic generators and an IDX reader/writer."""

from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn import datasets as skdata

IDX_TYPES = {
    0x08: np.dtype("u1"),
    0x09: np.dtype("i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}
IDX_CODES = {dt.newbyteorder("=").str[1:]: code for code, dt in IDX_TYPES.items()}


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    name: str
    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray
    x_test: np.ndarray
    y_test: np.ndarray
    num_classes: int

    @property
    def input_shape(self) -> tuple[int, ...]:
        return tuple(self.x_train.shape[1:])


def _open(path: Path):
    return gzip.open(path, "rb") if path.suffix == ".gz" else open(path, "rb")


def read_idx(path) -> np.ndarray:
    """Parse an IDX file (optionally gzip-compressed)."""
    path = Path(path)
    with _open(path) as fh:
        data = fh.read()
    if len(data) < 4 or data[0] != 0 or data[1] != 0:
        raise DatasetError(f"{path}: bad IDX magic")
    code, ndim = data[2], data[3]
    if code not in IDX_TYPES:
        raise DatasetError(f"{path}: unknown IDX type code 0x{code:02x}")
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    dtype = IDX_TYPES[code]
    count = int(np.prod(dims)) if ndim else 1
    offset = 4 + 4 * ndim
    if len(data) != offset + count * dtype.itemsize:
        raise DatasetError(f"{path}: payload size does not match header dims {dims}")
    return np.frombuffer(data, dtype=dtype, count=count, offset=offset).reshape(dims).astype(dtype.newbyteorder("="))


def write_idx(path, array: np.ndarray) -> Path:
    array = np.asarray(array)
    key = array.dtype.newbyteorder("=").str[1:]
    if key not in IDX_CODES:
        raise DatasetError(f"dtype {array.dtype} has no IDX type code")
    code = IDX_CODES[key]
    header = bytes([0, 0, code, array.ndim]) + struct.pack(f">{array.ndim}I", *array.shape)
    payload = np.ascontiguousarray(array, dtype=IDX_TYPES[code]).tobytes()
    path = Path(path)
    with (gzip.open(path, "wb") if path.suffix == ".gz" else open(path, "wb")) as fh:
        fh.write(header + payload)
    return path


def split(x, y, validation_fraction: float, test_fraction: float, seed: int):
    """Seeded shuffle, then carve test and validation splits off the front."""
    if not 0 < validation_fraction < 1 or not 0 <= test_fraction < 1:
        raise DatasetError("fractions must satisfy 0 < validation < 1 and 0 <= test < 1")
    order = np.random.default_rng(seed).permutation(len(y))
    x, y = x[order], y[order]
    n_test = int(round(len(y) * test_fraction))
    n_val = int(round((len(y) - n_test) * validation_fraction))
    test, val, train = slice(0, n_test), slice(n_test, n_test + n_val), slice(n_test + n_val, None)
    return (x[train], y[train]), (x[val], y[val]), (x[test], y[test])


def standardize(train: np.ndarray, *others: np.ndarray):
    """Per-feature zero mean / unit variance using training statistics only."""
    mean = train.mean(axis=0)
    std = train.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return [(a - mean) / std for a in (train, *others)]


def _synthetic(name: str, n_samples: int, noise: float, seed: int, centers: int):
    if name == "moons":
        return skdata.make_moons(n_samples=n_samples, noise=noise, random_state=seed)
    if name == "circles":
        return skdata.make_circles(n_samples=n_samples, noise=noise, factor=0.5, random_state=seed)
    if name == "blobs":
        return skdata.make_blobs(n_samples=n_samples, centers=centers, cluster_std=max(noise, 1e-6), random_state=seed)
    raise DatasetError(f"unknown dataset {name!r}")


SYNTHETIC = ("moons", "circles", "blobs")
DATASETS = (*SYNTHETIC, "idx")


def load_dataset(
    name: str,
    seed: int = 0,
    validation_fraction: float = 0.2,
    test_fraction: float = 0.2,
    n_samples: int = 1000,
    noise: float | None = None,
    centers: int = 3,
    images: str | None = None,
    labels: str | None = None,
    limit: int | None = None,
) -> Dataset:
    if name in SYNTHETIC:
        if noise is None:
            noise = {"moons": 0.1, "circles": 0.05, "blobs": 1.0}[name]
        x, y = _synthetic(name, n_samples, noise, seed, centers)
        x = x.astype(np.float64)
    elif name == "idx":
        if not images or not labels:
            raise DatasetError("idx dataset needs 'images' and 'labels' paths")
        x = read_idx(images).astype(np.float64)
        y = read_idx(labels)
        if limit is not None:
            x, y = x[:limit], y[:limit]
        if x.ndim == 3:
            x = x[..., None]
        if len(x) != len(y):
            raise DatasetError(f"{len(x)} images but {len(y)} labels")
    else:
        raise DatasetError(f"unknown dataset {name!r}; choose from {list(DATASETS)}")
    y = np.asarray(y).astype(np.int64)
    classes = np.unique(y)
    if classes.size < 2:
        raise DatasetError("dataset needs at least two classes")
    y = np.searchsorted(classes, y)
    (xtr, ytr), (xva, yva), (xte, yte) = split(x, y, validation_fraction, test_fraction, seed)
    xtr, xva, xte = standardize(xtr, xva, xte)
    return Dataset(name, xtr, ytr, xva, yva, xte, yte, int(classes.size))
