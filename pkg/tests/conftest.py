import os

import pytest

from datagen import synthetic_dataset
from rnn_introspect import idx, training

MNIST_ENV = "RNN_INTROSPECT_MNIST"

_acceptance_lines = []


def record_acceptance(number, name: str, status: str) -> None:
    line = f"ACCEPTANCE {number} ({name}): {status}"
    _acceptance_lines.append((number, line))
    print(line, flush=True)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_acceptance_lines, key=lambda item: str(item[0])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_dataset():
    return synthetic_dataset(n=512, seed=7)


@pytest.fixture(scope="session")
def small_eval_set():
    return synthetic_dataset(n=256, seed=11)


@pytest.fixture(scope="session")
def trained_small(small_dataset):
    """A small network trained on the synthetic glyphs; accurate enough to
    make perturbation and geometry behavior non-trivial."""
    config = training.TrainConfig(
        epochs=3, batch_size=32, lr=3e-3, seed=5, hidden_size=32
    )
    return training.train(config, small_dataset).checkpoint


def find_mnist():
    """Paths of the real MNIST IDX files, or None when unavailable.

    Looks in $RNN_INTROSPECT_MNIST, then ./data/mnist relative to the
    repository root.
    """
    candidates = []
    if os.environ.get(MNIST_ENV):
        candidates.append(os.environ[MNIST_ENV])
    here = os.path.dirname(os.path.abspath(__file__))
    candidates.append(os.path.join(here, "..", "data", "mnist"))
    for root in candidates:
        paths = idx.mnist_paths(root)
        if paths is not None:
            return paths
    return None
