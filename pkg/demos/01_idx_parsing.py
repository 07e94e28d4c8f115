"""Parsing IDX files and turning images into row-by-row sequences.

The IDX container is the classic MNIST binary layout: a big-endian magic
number, big-endian 32-bit dimensions, then raw unsigned bytes. Parsing is
bit-exact - serializing right back reproduces the input stream.
"""

import struct

import numpy as np

from rnn_introspect import idx

# Build a tiny image file by hand: 2 images of 28x28.
rng = np.random.default_rng(0)
payload = rng.integers(0, 256, size=2 * 28 * 28, dtype=np.uint8).tobytes()
stream = struct.pack(">IIII", idx.IMAGE_MAGIC, 2, 28, 28) + payload

images = idx.parse_idx_images(stream)
print(f"parsed {images.count} images of {images.rows}x{images.cols}")

# Round trip: the parser reads exactly the declared payload, nothing more.
assert idx.images_to_idx_bytes(images) == stream
print("serialize(parse(stream)) == stream")

labels = idx.parse_idx_labels(struct.pack(">II", idx.LABEL_MAGIC, 2) + bytes([3, 8]))
print(f"labels: {[int(v) for v in labels.labels]}")

# to_sequences pairs image i with label i and divides pixels by 255, so a
# pixel of 51 becomes exactly 51/255 = 0.2 and a blank row stays all zero.
dataset = idx.to_sequences(images, labels, dtype=np.float64)
print(f"dataset: {len(dataset)} sequences of shape {dataset.sequences.shape[1:]}")
print(f"value range: [{dataset.sequences.min():.3f}, {dataset.sequences.max():.3f}]")

# Row i of the image is timestep i of the sequence.
assert np.array_equal(dataset.sequences[0][5], images.pixels[0, 5] / 255.0)
print("row 5 of image 0 is timestep 5 of sequence 0")

# Malformed streams fail loudly with a named error.
for bad, expected in [
    (stream[:40], idx.TruncatedStreamError),
    (struct.pack(">IIII", idx.LABEL_MAGIC, 2, 28, 28) + payload, idx.WrongMagicError),
]:
    try:
        idx.parse_idx_images(bad)
    except expected as exc:
        print(f"{expected.__name__}: {exc}")
