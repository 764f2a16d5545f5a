"""MNIST (IDX) and CIFAR-10/100 binary readers, writers, folds and subsets.

Pixels are scaled by 1/255 into [0, 1] float32; no mean/std normalisation.
No downloading happens here: point the loaders at a directory holding the
original files (optionally gzipped).
"""

from __future__ import annotations

import gzip
import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "FoldPlan",
    "DatasetFormatError",
    "DatasetIOError",
    "DatasetConsistencyError",
    "ChecksumError",
    "parse_idx",
    "encode_idx",
    "load_mnist",
    "parse_cifar",
    "encode_cifar",
    "load_cifar",
    "make_folds",
    "subset",
    "sha256_file",
    "verify_manifest",
    "MNIST_FILES",
    "CIFAR10_FILES",
    "CIFAR100_FILES",
]

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}
CIFAR10_FILES = {
    "train": [f"data_batch_{i}.bin" for i in range(1, 6)],
    "test": ["test_batch.bin"],
}
CIFAR100_FILES = {"train": ["train.bin"], "test": ["test.bin"]}
CIFAR_PIXELS = 3 * 32 * 32


class DatasetFormatError(ValueError):
    """Bytes do not follow the expected file format."""


class DatasetIOError(OSError):
    """Missing or truncated input files."""


class DatasetConsistencyError(ValueError):
    """Image and label files disagree."""


class ChecksumError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    images: np.ndarray  # [N, C, H, W] float32 in [0, 1]
    labels: np.ndarray  # [N] int64
    classes: int
    name: str

    def __post_init__(self):
        if len(self.images) != len(self.labels):
            raise DatasetConsistencyError(f"{len(self.images)} images but {len(self.labels)} labels")
        if len(self.labels) and (self.labels.min() < 0 or self.labels.max() >= self.classes):
            raise DatasetConsistencyError(f"labels outside [0, {self.classes})")

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, idx, name: str | None = None) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.images[idx], self.labels[idx], self.classes, name or self.name)


# ---------------------------------------------------------------- IDX


def parse_idx(data: bytes, expected_magic: int | None = None) -> np.ndarray:
    """Decode an unsigned-byte IDX file into an array of its declared shape."""
    if len(data) < 4:
        raise DatasetFormatError("IDX data shorter than its magic number")
    magic = struct.unpack(">I", data[:4])[0]
    if expected_magic is not None and magic != expected_magic:
        raise DatasetFormatError(f"bad IDX magic 0x{magic:08x}, expected 0x{expected_magic:08x}")
    if magic >> 8 != 0x08:
        raise DatasetFormatError(f"bad IDX magic 0x{magic:08x}: only unsigned-byte data is supported")
    ndim = magic & 0xFF
    header = 4 + 4 * ndim
    if ndim == 0 or len(data) < header:
        raise DatasetIOError("IDX header truncated")
    dims = struct.unpack(f">{ndim}I", data[4:header])
    count = int(np.prod(dims, dtype=np.int64))
    if len(data) < header + count:
        raise DatasetIOError(f"IDX payload truncated: need {count} bytes, have {len(data) - header}")
    if len(data) > header + count:
        raise DatasetFormatError("trailing bytes after IDX payload")
    return np.frombuffer(data, dtype=np.uint8, count=count, offset=header).reshape(dims)


def encode_idx(array: np.ndarray) -> bytes:
    array = np.ascontiguousarray(array, dtype=np.uint8)
    header = struct.pack(">I", 0x0800 | array.ndim) + struct.pack(f">{array.ndim}I", *array.shape)
    return header + array.tobytes()


def _read(path: Path) -> bytes:
    for candidate in (path, path.with_name(path.name + ".gz")):
        if candidate.exists():
            raw = candidate.read_bytes()
            if candidate.suffix == ".gz":
                try:
                    raw = gzip.decompress(raw)
                except (OSError, EOFError) as exc:
                    raise DatasetIOError(f"{candidate}: {exc}") from exc
            return raw
    raise DatasetIOError(f"missing file {path} (or {path.name}.gz)")


def _to_unit(pixels: np.ndarray) -> np.ndarray:
    return pixels.astype(np.float32) / np.float32(255.0)


def mnist_split(images_bytes: bytes, labels_bytes: bytes, name: str) -> Dataset:
    images = parse_idx(images_bytes, IDX_IMAGES_MAGIC)
    labels = parse_idx(labels_bytes, IDX_LABELS_MAGIC)
    if images.ndim != 3 or labels.ndim != 1:
        raise DatasetFormatError("MNIST images must be 3-d and labels 1-d")
    if len(images) != len(labels):
        raise DatasetConsistencyError(f"{len(images)} images but {len(labels)} labels in {name}")
    return Dataset(_to_unit(images)[:, None, :, :], labels.astype(np.int64), 10, name)


def load_mnist(directory) -> tuple[Dataset, Dataset]:
    directory = Path(directory)
    raw = {key: _read(directory / fname) for key, fname in MNIST_FILES.items()}
    train = mnist_split(raw["train_images"], raw["train_labels"], "mnist-train")
    test = mnist_split(raw["test_images"], raw["test_labels"], "mnist-test")
    return train, test


# ---------------------------------------------------------------- CIFAR


def _record_size(variant: str) -> int:
    if variant == "c10":
        return 1 + CIFAR_PIXELS
    if variant == "c100":
        return 2 + CIFAR_PIXELS
    raise ValueError(f"variant must be 'c10' or 'c100', got {variant!r}")


def parse_cifar(data: bytes, variant: str) -> tuple[np.ndarray, np.ndarray]:
    """Return (uint8 images [N, 3, 32, 32], labels [N]); CIFAR-100 keeps fine labels."""
    size = _record_size(variant)
    if len(data) == 0 or len(data) % size:
        raise DatasetFormatError(f"CIFAR file size {len(data)} is not a positive multiple of {size}")
    rec = np.frombuffer(data, dtype=np.uint8).reshape(-1, size)
    nlab = size - CIFAR_PIXELS
    labels = rec[:, nlab - 1].astype(np.int64)
    images = rec[:, nlab:].reshape(-1, 3, 32, 32)
    return images, labels


def encode_cifar(images: np.ndarray, labels: np.ndarray, variant: str, coarse: np.ndarray | None = None) -> bytes:
    images = np.asarray(images, dtype=np.uint8).reshape(len(images), CIFAR_PIXELS)
    labels = np.asarray(labels, dtype=np.uint8)[:, None]
    if variant == "c100":
        coarse = np.zeros_like(labels) if coarse is None else np.asarray(coarse, np.uint8)[:, None]
        labels = np.hstack([coarse, labels])
    else:
        _record_size(variant)
    return np.hstack([labels, images]).tobytes()


def _cifar_dir(directory: Path, variant: str) -> Path:
    sub = "cifar-10-batches-bin" if variant == "c10" else "cifar-100-binary"
    return directory / sub if (directory / sub).is_dir() else directory


def load_cifar(directory, variant: str = "c10") -> tuple[Dataset, Dataset]:
    files = CIFAR10_FILES if variant == "c10" else CIFAR100_FILES
    _record_size(variant)
    base = _cifar_dir(Path(directory), variant)
    classes = 10 if variant == "c10" else 100
    out = []
    for split in ("train", "test"):
        parts = [parse_cifar(_read(base / f), variant) for f in files[split]]
        images = np.concatenate([p[0] for p in parts])
        labels = np.concatenate([p[1] for p in parts])
        out.append(Dataset(_to_unit(images), labels, classes, f"cifar{classes}-{split}"))
    return out[0], out[1]


# ---------------------------------------------------------------- folds & subsets


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: np.ndarray  # fold index per sample
    seed: int

    def sizes(self) -> list[int]:
        return np.bincount(self.assignments, minlength=self.k).tolist()


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(int(seed) & 0xFFFFFFFFFFFFFFFF)


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Seeded shuffle, then round-robin fold assignment."""
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"cannot split {n} samples into {k} folds")
    perm = _rng(seed).permutation(n)
    assignments = np.empty(n, dtype=np.int64)
    assignments[perm] = np.arange(n) % k
    return FoldPlan(k, assignments, seed)


def subset(data: Dataset, per_class: int, seed: int) -> Dataset:
    """Class-balanced sample of ``per_class`` items per label, shuffled."""
    if per_class < 1:
        raise ValueError("per_class must be >= 1")
    counts = np.bincount(data.labels, minlength=data.classes)
    present = counts[counts > 0]
    if per_class > present.min():
        raise ValueError(f"per_class={per_class} exceeds smallest class count {present.min()}")
    rng = _rng(seed)
    picks = []
    for c in range(data.classes):
        members = np.flatnonzero(data.labels == c)
        if len(members):
            picks.append(rng.choice(members, size=per_class, replace=False))
    idx = rng.permutation(np.concatenate(picks))
    return data.take(idx, f"{data.name}-sub{per_class}")


# ---------------------------------------------------------------- manifests


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def verify_manifest(directory, manifest) -> dict[str, str]:
    """Check ``filename sha256`` lines against files under ``directory``."""
    directory = Path(directory)
    checked = {}
    for lineno, line in enumerate(Path(manifest).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ChecksumError(f"{manifest}:{lineno}: expected 'filename sha256'")
        name, expected = parts
        path = directory / name
        if not path.exists():
            raise DatasetIOError(f"manifest lists missing file {path}")
        actual = sha256_file(path)
        if actual != expected.lower():
            raise ChecksumError(f"{name}: sha256 {actual} != manifest {expected}")
        checked[name] = actual
    return checked
