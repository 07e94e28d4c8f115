import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datagen import synthetic_idx_bytes
from rnn_introspect import idx


def image_stream(count, rows=28, cols=28, payload=None):
    header = struct.pack(">IIII", idx.IMAGE_MAGIC, count, rows, cols)
    if payload is None:
        payload = bytes(count * rows * cols)
    return header + payload


def label_stream(values, count=None):
    count = len(values) if count is None else count
    return struct.pack(">II", idx.LABEL_MAGIC, count) + bytes(values)


class TestParseImages:
    def test_header_arithmetic(self):
        parsed = idx.parse_idx_images(image_stream(2, payload=bytes(range(256)) * 6 + bytes(32)))
        assert parsed.count == 2
        assert parsed.rows == 28 and parsed.cols == 28
        assert parsed.pixels.shape == (2, 28, 28)

    def test_truncated_payload(self):
        stream = struct.pack(">IIII", idx.IMAGE_MAGIC, 1, 28, 28)
        with pytest.raises(idx.TruncatedStreamError):
            idx.parse_idx_images(stream)

    def test_truncated_header(self):
        with pytest.raises(idx.TruncatedStreamError):
            idx.parse_idx_images(b"\x00\x00\x08")

    def test_wrong_magic(self):
        stream = struct.pack(">IIII", idx.LABEL_MAGIC, 1, 28, 28) + bytes(784)
        with pytest.raises(idx.WrongMagicError):
            idx.parse_idx_images(stream)

    def test_never_reads_beyond_declared_payload(self):
        stream = image_stream(1)
        with_garbage = stream + b"\xff\xfe\xfd"
        a = idx.parse_idx_images(stream)
        b = idx.parse_idx_images(with_garbage)
        assert np.array_equal(a.pixels, b.pixels)

    def test_non_28x28_warns(self):
        stream = image_stream(1, rows=10, cols=10)
        with pytest.warns(idx.DimensionWarning):
            parsed = idx.parse_idx_images(stream)
        assert parsed.rows == 10

    def test_pixels_not_rescaled(self):
        payload = bytes([0, 255] * 392)
        parsed = idx.parse_idx_images(image_stream(1, payload=payload))
        assert parsed.pixels.min() == 0 and parsed.pixels.max() == 255


class TestParseLabels:
    def test_basic(self):
        parsed = idx.parse_idx_labels(label_stream([7, 0, 9]))
        assert parsed.count == 3
        assert list(parsed.labels) == [7, 0, 9]

    def test_invalid_label(self):
        with pytest.raises(idx.InvalidLabelError):
            idx.parse_idx_labels(label_stream([1, 12, 3]))

    def test_empty(self):
        parsed = idx.parse_idx_labels(label_stream([]))
        assert parsed.count == 0
        assert parsed.labels.size == 0

    def test_wrong_magic(self):
        stream = struct.pack(">II", idx.IMAGE_MAGIC, 1) + bytes([1])
        with pytest.raises(idx.WrongMagicError):
            idx.parse_idx_labels(stream)

    def test_truncated(self):
        with pytest.raises(idx.TruncatedStreamError):
            idx.parse_idx_labels(struct.pack(">II", idx.LABEL_MAGIC, 5) + bytes(2))


class TestRoundTrip:
    @given(st.integers(0, 4), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_images_round_trip(self, count, seed):
        rng = np.random.default_rng(seed)
        payload = rng.integers(0, 256, size=count * 784, dtype=np.uint8).tobytes()
        stream = image_stream(count, payload=payload)
        parsed = idx.parse_idx_images(stream)
        assert idx.images_to_idx_bytes(parsed) == stream

    @given(st.lists(st.integers(0, 9), max_size=64))
    @settings(max_examples=25, deadline=None)
    def test_labels_round_trip(self, values):
        stream = label_stream(values)
        parsed = idx.parse_idx_labels(stream)
        assert idx.labels_to_idx_bytes(parsed) == stream

    def test_synthetic_round_trip(self):
        image_bytes, label_bytes = synthetic_idx_bytes(16, seed=3)
        assert idx.images_to_idx_bytes(idx.parse_idx_images(image_bytes)) == image_bytes
        assert idx.labels_to_idx_bytes(idx.parse_idx_labels(label_bytes)) == label_bytes


class TestToSequences:
    def make_pair(self, pixels):
        pixels = np.asarray(pixels, dtype=np.uint8)
        images = idx.ImageSet(count=pixels.shape[0], rows=28, cols=28, pixels=pixels)
        labels = idx.LabelSet(count=pixels.shape[0], labels=np.zeros(pixels.shape[0], np.uint8))
        return images, labels

    def test_all_zero_image(self):
        dataset = idx.to_sequences(*self.make_pair(np.zeros((1, 28, 28))))
        assert dataset.sequences.shape == (1, 28, 28)
        assert np.all(dataset.sequences == 0.0)

    def test_all_255_image(self):
        dataset = idx.to_sequences(*self.make_pair(np.full((1, 28, 28), 255)))
        assert np.all(dataset.sequences == 1.0)

    def test_single_pixel_51(self):
        pixels = np.zeros((1, 28, 28))
        pixels[0, 0, 0] = 51
        dataset = idx.to_sequences(*self.make_pair(pixels), dtype=np.float64)
        assert dataset.sequences[0, 0, 0] == 51 / 255
        assert dataset.sequences[0, 0, 0] == pytest.approx(0.2)
        assert np.count_nonzero(dataset.sequences) == 1

    def test_rows_become_timesteps(self):
        pixels = np.zeros((1, 28, 28))
        pixels[0, 5, :] = 100
        dataset = idx.to_sequences(*self.make_pair(pixels))
        assert np.all(dataset.sequences[0, 5] > 0)
        assert np.all(dataset.sequences[0, 4] == 0)

    def test_count_mismatch(self):
        images, _ = self.make_pair(np.zeros((2, 28, 28)))
        labels = idx.LabelSet(count=1, labels=np.zeros(1, np.uint8))
        with pytest.raises(idx.CountMismatchError):
            idx.to_sequences(images, labels)

    def test_rejects_non_28(self):
        images = idx.ImageSet(count=1, rows=10, cols=10, pixels=np.zeros((1, 10, 10), np.uint8))
        labels = idx.LabelSet(count=1, labels=np.zeros(1, np.uint8))
        with pytest.raises(idx.DimensionMismatchError):
            idx.to_sequences(images, labels)

    @given(st.integers(0, 127))
    @settings(max_examples=30, deadline=None)
    def test_normalization_linear_in_intensity(self, value):
        pixels = np.zeros((2, 28, 28))
        pixels[0, 0, 0] = value
        pixels[1, 0, 0] = 2 * value
        dataset = idx.to_sequences(*self.make_pair(pixels))
        assert dataset.sequences[1, 0, 0] == 2 * dataset.sequences[0, 0, 0]

    def test_order_preserved(self):
        pixels = np.zeros((3, 28, 28), np.uint8)
        pixels[1] = 255
        images = idx.ImageSet(count=3, rows=28, cols=28, pixels=pixels)
        labels = idx.LabelSet(count=3, labels=np.array([3, 1, 4], np.uint8))
        dataset = idx.to_sequences(images, labels)
        assert list(dataset.labels) == [3, 1, 4]
        assert np.all(dataset.sequences[1] == 1.0)
