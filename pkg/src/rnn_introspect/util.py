"""Small shared helpers: atomic file writes, checksums, worker-count policy."""

import hashlib
import os
import tempfile

THREADS_ENV = "RNN_INTROSPECT_THREADS"


def atomic_write_bytes(path, data: bytes) -> None:
    """Write `data` to `path` via a temp file + rename, so readers never see
    a partially written file and reruns overwrite atomically."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(prefix=os.path.basename(path) + ".", dir=directory)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def worker_count() -> int:
    """Number of worker threads for chunk-parallel evaluation and sweeps.

    Defaults to 1 (plain sequential numpy). The RNN_INTROSPECT_THREADS
    environment variable enables and caps parallelism; values are clamped
    to the machine's CPU count.
    """
    raw = os.environ.get(THREADS_ENV)
    if not raw:
        return 1
    try:
        requested = int(raw)
    except ValueError:
        return 1
    return max(1, min(requested, os.cpu_count() or 1))
