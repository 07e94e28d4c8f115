"""Training orchestration: seeded 30-epoch runs, evaluation, checkpoints.

Reproducibility scheme: every random stream is a Philox counter-based
generator keyed by the run seed. Stream 0 initializes the weights and
stream 1 + e shuffles epoch e, so resuming from a checkpoint at any epoch
boundary replays exactly the trajectory of an uninterrupted run.
"""

import dataclasses
import json
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .idx import SequenceDataset
from .rnn import (
    AdamState,
    Gradients,
    RnnParams,
    adam_step,
    bptt_batch,
    init_adam,
    init_params,
)
from .util import atomic_write_bytes, worker_count

CHECKPOINT_MAGIC = b"RNNINTRO"
CHECKPOINT_VERSION = 1
EVAL_CHUNK = 2048


class EmptyDatasetError(ValueError):
    pass


class NonFiniteLossError(FloatingPointError):
    pass


class VersionMismatchError(ValueError):
    pass


class CorruptFileError(ValueError):
    pass


@dataclass
class TrainConfig:
    epochs: int = 30
    batch_size: int = 64
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    precision: str = "float32"  # "float64" for the high-precision mode
    output_bias: bool = True
    hidden_size: int = 200

    @property
    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32

    def validate(self) -> None:
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.lr <= 0:
            raise ValueError(f"lr must be > 0, got {self.lr}")
        if self.precision not in ("float32", "float64"):
            raise ValueError(f"precision must be float32 or float64, got {self.precision}")


@dataclass
class EpochMetrics:
    epoch: int  # 1-based
    train_loss: float
    train_acc: float
    test_acc: float | None = None


@dataclass
class Checkpoint:
    config: TrainConfig
    params: RnnParams
    adam: AdamState
    epoch: int  # epochs completed so far
    version: int = CHECKPOINT_VERSION


@dataclass
class EvalResult:
    accuracy: float
    confusion: np.ndarray  # (classes, classes) int64, rows = true class


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    metrics: list


def _stream(seed: int, index: int) -> np.random.Generator:
    # Philox streams 2^192 apart; index 0 = init, 1 + e = shuffle of epoch e.
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, index]))


def train(
    config: TrainConfig,
    train_set: SequenceDataset,
    eval_set: SequenceDataset | None = None,
    resume_from: Checkpoint | None = None,
    on_epoch=None,
) -> TrainResult:
    """Run mini-batch Adam training.

    Each epoch draws one seeded permutation, averages gradients over every
    mini-batch and applies one Adam step per batch. Loss is reported as the
    mean over examples. Aborts with NonFiniteLossError (naming the epoch
    and batch) the moment the loss stops being finite.
    """
    config.validate()
    n = len(train_set)
    if n == 0:
        raise EmptyDatasetError("cannot train on an empty dataset")

    if resume_from is not None:
        params = resume_from.params.copy()
        adam = resume_from.adam
        start_epoch = resume_from.epoch
    else:
        params = init_params(
            n_hidden=config.hidden_size,
            n_input=train_set.sequences.shape[2],
            n_classes=10,
            rng=_stream(config.seed, 0),
            dtype=config.dtype,
        )
        adam = init_adam(params, lr=config.lr, beta1=config.beta1, beta2=config.beta2, eps=config.eps)
        start_epoch = 0

    sequences = train_set.sequences.astype(config.dtype, copy=False)
    labels = train_set.labels
    metrics: list[EpochMetrics] = []

    for epoch in range(start_epoch, config.epochs):
        perm = _stream(config.seed, 1 + epoch).permutation(n)
        loss_sum = 0.0
        correct = 0
        for batch_index, lo in enumerate(range(0, n, config.batch_size)):
            sel = perm[lo : lo + config.batch_size]
            loss, grads, preds = bptt_batch(params, sequences[sel], labels[sel])
            if not np.isfinite(loss):
                raise NonFiniteLossError(
                    f"non-finite loss at epoch {epoch + 1}, batch {batch_index}"
                )
            if not config.output_bias:
                grads = Gradients(grads.g_in, grads.g_rec, grads.g_out, np.zeros_like(grads.g_bout))
            params, adam = adam_step(params, grads, adam)
            loss_sum += loss * len(sel)
            correct += int(np.sum(preds == labels[sel]))

        test_acc = None
        if eval_set is not None:
            test_acc = evaluate(params, eval_set).accuracy
        entry = EpochMetrics(
            epoch=epoch + 1,
            train_loss=loss_sum / n,
            train_acc=correct / n,
            test_acc=test_acc,
        )
        metrics.append(entry)
        if on_epoch is not None:
            on_epoch(entry)

    checkpoint = Checkpoint(
        config=config, params=params, adam=adam, epoch=max(config.epochs, start_epoch)
    )
    return TrainResult(checkpoint=checkpoint, metrics=metrics)


def _hidden_at_readout(params: RnnParams, seqs: np.ndarray, readout_step: int) -> np.ndarray:
    h = np.zeros((seqs.shape[0], params.n_hidden), dtype=params.dtype)
    proj = seqs @ params.w_in.T
    for t in range(readout_step):
        h = np.tanh(proj[:, t, :] + h @ params.w_rec.T)
    return h


def evaluate(
    params: RnnParams,
    dataset: SequenceDataset,
    readout_step: int | None = None,
    chunk: int = EVAL_CHUNK,
    workers: int | None = None,
) -> EvalResult:
    """Accuracy and confusion counts under argmax readout at `readout_step`
    (default: the final step). Invariant to dataset order."""
    n = len(dataset)
    if n == 0:
        raise EmptyDatasetError("cannot evaluate an empty dataset")
    t_len = dataset.seq_len
    step = t_len if readout_step is None else readout_step
    if not 1 <= step <= t_len:
        raise ValueError(f"readout step {step} outside 1..{t_len}")

    seqs = dataset.sequences.astype(params.dtype, copy=False)
    labels = dataset.labels
    n_classes = params.n_classes

    def eval_chunk(lo: int) -> np.ndarray:
        hi = min(lo + chunk, n)
        h = _hidden_at_readout(params, seqs[lo:hi], step)
        logits = h @ params.w_out.T + params.b_out
        preds = np.argmax(logits, axis=1)
        conf = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(conf, (labels[lo:hi], preds), 1)
        return conf

    starts = list(range(0, n, chunk))
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(eval_chunk, starts))
    else:
        partials = [eval_chunk(lo) for lo in starts]
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for part in partials:
        confusion += part
    accuracy = float(np.trace(confusion)) / n
    return EvalResult(accuracy=accuracy, confusion=confusion)


# --- checkpoint serialization -------------------------------------------
#
# magic (8) | version u32 LE | header_len u32 LE | header JSON (utf-8)
# | raw array bytes, little-endian, in header order | crc32 u32 LE
#
# Arrays are 32-bit floats in the default precision mode ("<f4"); the
# float64 mode tags them "<f8" so resume stays bit-exact.

_ARRAY_ORDER = (
    "w_in", "w_rec", "w_out", "b_out",
    "m_in", "m_rec", "m_out", "m_bout",
    "v_in", "v_rec", "v_out", "v_bout",
)


def _checkpoint_arrays(ckpt: Checkpoint) -> dict:
    p, m, v = ckpt.params, ckpt.adam.m, ckpt.adam.v
    return {
        "w_in": p.w_in, "w_rec": p.w_rec, "w_out": p.w_out, "b_out": p.b_out,
        "m_in": m.g_in, "m_rec": m.g_rec, "m_out": m.g_out, "m_bout": m.g_bout,
        "v_in": v.g_in, "v_rec": v.g_rec, "v_out": v.g_out, "v_bout": v.g_bout,
    }


def checkpoint_to_bytes(ckpt: Checkpoint) -> bytes:
    arrays = _checkpoint_arrays(ckpt)
    le = "<f8" if ckpt.config.precision == "float64" else "<f4"
    header = {
        "config": dataclasses.asdict(ckpt.config),
        "init": "uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) from run seed, zero readout bias",
        "epoch": ckpt.epoch,
        "adam": {
            "lr": ckpt.adam.lr,
            "beta1": ckpt.adam.beta1,
            "beta2": ckpt.adam.beta2,
            "eps": ckpt.adam.eps,
            "step_count": ckpt.adam.step_count,
        },
        "arrays": [
            {"name": name, "dtype": le, "shape": list(arrays[name].shape)}
            for name in _ARRAY_ORDER
        ],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    out = bytearray()
    out += CHECKPOINT_MAGIC
    out += struct.pack("<I", ckpt.version)
    out += struct.pack("<I", len(blob))
    out += blob
    for name in _ARRAY_ORDER:
        out += np.ascontiguousarray(arrays[name], dtype=le).tobytes()
    out += struct.pack("<I", zlib.crc32(bytes(out)))
    return bytes(out)


def checkpoint_from_bytes(data: bytes) -> Checkpoint:
    if len(data) < 20 or data[:8] != CHECKPOINT_MAGIC:
        raise CorruptFileError("not a checkpoint file")
    (version,) = struct.unpack("<I", data[8:12])
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(
            f"checkpoint format version {version}, this build reads {CHECKPOINT_VERSION}"
        )
    (crc_stored,) = struct.unpack("<I", data[-4:])
    if zlib.crc32(data[:-4]) != crc_stored:
        raise CorruptFileError("checksum mismatch")
    (header_len,) = struct.unpack("<I", data[12:16])
    try:
        header = json.loads(data[16 : 16 + header_len].decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise CorruptFileError(f"unreadable header: {exc}") from exc

    offset = 16 + header_len
    arrays = {}
    for entry in header["arrays"]:
        dt = np.dtype(entry["dtype"])
        count = int(np.prod(entry["shape"])) if entry["shape"] else 1
        nbytes = count * dt.itemsize
        if offset + nbytes > len(data) - 4:
            raise CorruptFileError(f"array {entry['name']} truncated")
        arrays[entry["name"]] = np.frombuffer(
            data, dtype=dt, count=count, offset=offset
        ).reshape(entry["shape"]).copy()
        offset += nbytes
    if offset != len(data) - 4:
        raise CorruptFileError("trailing bytes after arrays")

    config = TrainConfig(**header["config"])
    params = RnnParams(arrays["w_in"], arrays["w_rec"], arrays["w_out"], arrays["b_out"])
    adam = AdamState(
        m=Gradients(arrays["m_in"], arrays["m_rec"], arrays["m_out"], arrays["m_bout"]),
        v=Gradients(arrays["v_in"], arrays["v_rec"], arrays["v_out"], arrays["v_bout"]),
        step_count=header["adam"]["step_count"],
        lr=header["adam"]["lr"],
        beta1=header["adam"]["beta1"],
        beta2=header["adam"]["beta2"],
        eps=header["adam"]["eps"],
    )
    return Checkpoint(config=config, params=params, adam=adam, epoch=header["epoch"], version=version)


def save_checkpoint(ckpt: Checkpoint, path) -> None:
    atomic_write_bytes(path, checkpoint_to_bytes(ckpt))


def load_checkpoint(path) -> Checkpoint:
    with open(path, "rb") as fh:
        return checkpoint_from_bytes(fh.read())


def metrics_to_csv(metrics: list) -> str:
    lines = ["epoch,train_loss,train_acc,test_acc"]
    for m in metrics:
        test = "" if m.test_acc is None else repr(m.test_acc)
        lines.append(f"{m.epoch},{m.train_loss!r},{m.train_acc!r},{test}")
    return "\n".join(lines) + "\n"
