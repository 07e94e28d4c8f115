"""Shared helpers for the demo scripts.

Every demo runs out of the box on a small synthetic digit-like dataset so
you can explore the toolkit without downloading anything. To run against
the real MNIST digits instead, set RNN_INTROSPECT_MNIST to a directory
containing the four uncompressed IDX files (train-images-idx3-ubyte,
train-labels-idx1-ubyte, t10k-images-idx3-ubyte, t10k-labels-idx1-ubyte).
"""

import os

import numpy as np

from rnn_introspect import idx

OUT_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")


def out_path(name: str) -> str:
    os.makedirs(OUT_DIR, exist_ok=True)
    return os.path.join(OUT_DIR, name)


def synthetic_split(n: int, seed: int = 0) -> idx.SequenceDataset:
    """Ten glyph classes: a bright vertical bar whose column encodes the
    class, over a noisy background. Easy for the RNN, handy for demos."""
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 10, size=n).astype(np.uint8)
    images = rng.integers(0, 12, size=(n, 28, 28)).astype(np.uint8)
    for i, cls in enumerate(labels):
        c0 = 2 + 2 * int(cls)
        images[i, :, c0 : c0 + 2] = rng.integers(180, 256, size=(28, 2))
    image_set = idx.ImageSet(count=n, rows=28, cols=28, pixels=images)
    label_set = idx.LabelSet(count=n, labels=labels)
    return idx.to_sequences(image_set, label_set)


def load_splits(train_n: int = 2000, test_n: int = 1000):
    """(train, test, source) - real MNIST when available, synthetic otherwise."""
    root = os.environ.get("RNN_INTROSPECT_MNIST", "")
    paths = idx.mnist_paths(root) if root else None
    if paths:
        train = idx.load_dataset(paths["train_images"], paths["train_labels"])
        test = idx.load_dataset(paths["test_images"], paths["test_labels"])
        return train, test, "MNIST"
    return synthetic_split(train_n, seed=1), synthetic_split(test_n, seed=2), "synthetic"
