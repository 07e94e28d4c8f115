"""Run manifests: a JSON record of what a command ran, on which inputs,
with which seeds, and the checksum of every artifact it wrote.

The manifest is always written last, so its presence means the run
finished and every listed output is final. Re-running a command with the
manifest's config and seeds reproduces the checksummed outputs bit-exactly
(the manifest itself carries the wall-clock duration and is therefore not
self-checksummed).
"""

import json
import os
import time
from dataclasses import dataclass, field

from .util import atomic_write_bytes, atomic_write_text, sha256_file

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    command: str
    config: dict
    seeds: dict
    inputs: dict
    outputs: dict = field(default_factory=dict)  # name -> {path, bytes, sha256}
    duration_seconds: float = 0.0

    def add_output(self, name: str, path) -> None:
        path = os.fspath(path)
        self.outputs[name] = {
            "path": path,
            "bytes": os.path.getsize(path),
            "sha256": sha256_file(path),
        }

    def to_json(self) -> str:
        payload = {
            "command": self.command,
            "config": self.config,
            "seeds": self.seeds,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "duration_seconds": self.duration_seconds,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


class ManifestWriter:
    """Collects artifacts for one command and writes the manifest last."""

    def __init__(self, out_dir, command: str, config: dict, seeds: dict, inputs: dict):
        self.out_dir = os.fspath(out_dir)
        self.manifest = RunManifest(
            command=command,
            config=config,
            seeds=seeds,
            inputs={k: os.fspath(v) for k, v in inputs.items()},
        )
        self._start = time.monotonic()

    def write_text(self, name: str, relpath: str, text: str) -> str:
        path = os.path.join(self.out_dir, relpath)
        atomic_write_text(path, text)
        self.manifest.add_output(name, path)
        return path

    def write_bytes(self, name: str, relpath: str, data: bytes) -> str:
        path = os.path.join(self.out_dir, relpath)
        atomic_write_bytes(path, data)
        self.manifest.add_output(name, path)
        return path

    def record(self, name: str, path) -> None:
        self.manifest.add_output(name, path)

    def finish(self) -> str:
        self.manifest.duration_seconds = time.monotonic() - self._start
        path = os.path.join(self.out_dir, MANIFEST_NAME)
        atomic_write_text(path, self.manifest.to_json())
        return path
