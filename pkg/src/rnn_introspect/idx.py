"""MNIST IDX container parsing and conversion to row-by-row input sequences.

IDX layout (all integers big-endian):
    images:  u32 magic 0x00000803 | u32 count | u32 rows | u32 cols | u8 pixels
    labels:  u32 magic 0x00000801 | u32 count | u8 labels

Pixels stay raw uint8 through parsing; `to_sequences` divides by 255 so a
blank row really is all zeros.
"""

import os
import struct
import warnings
from dataclasses import dataclass

import numpy as np

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
STUDY_ROWS = 28
STUDY_COLS = 28
NUM_CLASSES = 10


class IdxFormatError(ValueError):
    """Base class for malformed IDX streams."""


class WrongMagicError(IdxFormatError):
    pass


class TruncatedStreamError(IdxFormatError):
    pass


class InvalidLabelError(IdxFormatError):
    pass


class CountMismatchError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class DimensionWarning(UserWarning):
    """Images parsed fine but are not the 28x28 this study expects."""


@dataclass
class ImageSet:
    count: int
    rows: int
    cols: int
    pixels: np.ndarray  # (count, rows, cols) uint8


@dataclass
class LabelSet:
    count: int
    labels: np.ndarray  # (count,) uint8, each < 10


@dataclass
class SequenceDataset:
    """Row sequences paired with class labels.

    sequences: (n, t, 28) float array with values in [0, 1]; row i of the
    source image is timestep i. labels: (n,) int64.
    """

    sequences: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return self.sequences.shape[0]

    @property
    def seq_len(self) -> int:
        return self.sequences.shape[1]

    def subset(self, indices) -> "SequenceDataset":
        indices = np.asarray(indices)
        return SequenceDataset(self.sequences[indices], self.labels[indices])


def parse_idx_images(data: bytes) -> ImageSet:
    """Parse an IDX image stream bit-exactly; pixels are never rescaled."""
    if len(data) < 16:
        raise TruncatedStreamError(
            f"image stream has {len(data)} bytes, header needs 16"
        )
    magic, count, rows, cols = struct.unpack(">IIII", data[:16])
    if magic != IMAGE_MAGIC:
        raise WrongMagicError(
            f"expected image magic 0x{IMAGE_MAGIC:08x}, got 0x{magic:08x}"
        )
    payload = count * rows * cols
    if len(data) - 16 < payload:
        raise TruncatedStreamError(
            f"header declares {payload} pixel bytes, stream has {len(data) - 16}"
        )
    if count > 0 and (rows != STUDY_ROWS or cols != STUDY_COLS):
        warnings.warn(
            f"images are {rows}x{cols}, not {STUDY_ROWS}x{STUDY_COLS}",
            DimensionWarning,
        )
    pixels = (
        np.frombuffer(data, dtype=np.uint8, count=payload, offset=16)
        .reshape(count, rows, cols)
        .copy()
    )
    return ImageSet(count=count, rows=rows, cols=cols, pixels=pixels)


def parse_idx_labels(data: bytes) -> LabelSet:
    if len(data) < 8:
        raise TruncatedStreamError(
            f"label stream has {len(data)} bytes, header needs 8"
        )
    magic, count = struct.unpack(">II", data[:8])
    if magic != LABEL_MAGIC:
        raise WrongMagicError(
            f"expected label magic 0x{LABEL_MAGIC:08x}, got 0x{magic:08x}"
        )
    if len(data) - 8 < count:
        raise TruncatedStreamError(
            f"header declares {count} labels, stream has {len(data) - 8} bytes"
        )
    labels = np.frombuffer(data, dtype=np.uint8, count=count, offset=8).copy()
    if labels.size and labels.max() >= NUM_CLASSES:
        bad = int(labels[labels >= NUM_CLASSES][0])
        raise InvalidLabelError(f"label byte {bad} is outside 0..9")
    return LabelSet(count=count, labels=labels)


def images_to_idx_bytes(images: ImageSet) -> bytes:
    header = struct.pack(">IIII", IMAGE_MAGIC, images.count, images.rows, images.cols)
    return header + np.ascontiguousarray(images.pixels, dtype=np.uint8).tobytes()


def labels_to_idx_bytes(labels: LabelSet) -> bytes:
    header = struct.pack(">II", LABEL_MAGIC, labels.count)
    return header + np.ascontiguousarray(labels.labels, dtype=np.uint8).tobytes()


def to_sequences(images: ImageSet, labels: LabelSet, dtype=np.float32) -> SequenceDataset:
    """Normalize pixel rows into [0, 1] sequences, pairing image i with label i."""
    if images.count != labels.count:
        raise CountMismatchError(
            f"{images.count} images but {labels.count} labels"
        )
    if images.count > 0 and (images.rows != STUDY_ROWS or images.cols != STUDY_COLS):
        raise DimensionMismatchError(
            f"this study needs {STUDY_ROWS}x{STUDY_COLS} images, got "
            f"{images.rows}x{images.cols}"
        )
    sequences = images.pixels.astype(dtype) / dtype(255.0)
    return SequenceDataset(sequences=sequences, labels=labels.labels.astype(np.int64))


def load_idx_images(path) -> ImageSet:
    with open(path, "rb") as fh:
        return parse_idx_images(fh.read())


def load_idx_labels(path) -> LabelSet:
    with open(path, "rb") as fh:
        return parse_idx_labels(fh.read())


def load_dataset(images_path, labels_path, dtype=np.float32) -> SequenceDataset:
    return to_sequences(load_idx_images(images_path), load_idx_labels(labels_path), dtype)


MNIST_FILES = {
    "train_images": "train-images-idx3-ubyte",
    "train_labels": "train-labels-idx1-ubyte",
    "test_images": "t10k-images-idx3-ubyte",
    "test_labels": "t10k-labels-idx1-ubyte",
}


def mnist_paths(root) -> dict | None:
    """Map of the four canonical (uncompressed) MNIST files under `root`,
    or None if any is missing. Decompress .gz downloads first."""
    paths = {}
    for key, name in MNIST_FILES.items():
        candidate = os.path.join(os.fspath(root), name)
        if not os.path.exists(candidate):
            return None
        paths[key] = candidate
    return paths
