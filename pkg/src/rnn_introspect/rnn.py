"""Vanilla tanh RNN kernel: forward pass, softmax cross-entropy,
backpropagation through time, and the Adam update rule.

The recurrence keeps no bias term:

    h_0 = 0
    h_t = tanh(w_in @ x_t + w_rec @ h_{t-1})
    logits = w_out @ h_T + b_out

All operations are pure: they never mutate their inputs and return fresh
arrays, so parameter and gradient values can be shared read-only.
"""

from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-30  # clamp for log() in the cross-entropy


class EmptySequenceError(ValueError):
    pass


class NonFiniteInputError(ValueError):
    pass


class InvalidLabelError(ValueError):
    pass


class ReadoutOutOfRangeError(ValueError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class RnnParams:
    """The entire trainable state: three weight matrices plus readout bias."""

    w_in: np.ndarray  # (hidden, inputs)
    w_rec: np.ndarray  # (hidden, hidden)
    w_out: np.ndarray  # (classes, hidden)
    b_out: np.ndarray  # (classes,)

    @property
    def n_hidden(self) -> int:
        return self.w_rec.shape[0]

    @property
    def n_input(self) -> int:
        return self.w_in.shape[1]

    @property
    def n_classes(self) -> int:
        return self.w_out.shape[0]

    @property
    def dtype(self):
        return self.w_in.dtype

    def arrays(self) -> dict:
        return {
            "w_in": self.w_in,
            "w_rec": self.w_rec,
            "w_out": self.w_out,
            "b_out": self.b_out,
        }

    def astype(self, dtype) -> "RnnParams":
        return RnnParams(
            self.w_in.astype(dtype),
            self.w_rec.astype(dtype),
            self.w_out.astype(dtype),
            self.b_out.astype(dtype),
        )

    def copy(self) -> "RnnParams":
        return RnnParams(
            self.w_in.copy(), self.w_rec.copy(), self.w_out.copy(), self.b_out.copy()
        )


@dataclass
class Gradients:
    """Loss gradients, shaped exactly like RnnParams."""

    g_in: np.ndarray
    g_rec: np.ndarray
    g_out: np.ndarray
    g_bout: np.ndarray

    def arrays(self) -> dict:
        return {
            "g_in": self.g_in,
            "g_rec": self.g_rec,
            "g_out": self.g_out,
            "g_bout": self.g_bout,
        }


@dataclass
class HiddenTrajectory:
    """Per-timestep hidden vectors for one input sequence, shape (T, hidden)."""

    states: np.ndarray

    def __len__(self) -> int:
        return self.states.shape[0]


def init_params(
    n_hidden: int = 200,
    n_input: int = 28,
    n_classes: int = 10,
    rng: np.random.Generator | None = None,
    dtype=np.float32,
) -> RnnParams:
    """Weights drawn uniform in (-1/sqrt(fan_in), +1/sqrt(fan_in)); zero bias."""
    if rng is None:
        rng = np.random.default_rng(0)

    def draw(rows, cols, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=(rows, cols)).astype(dtype)

    return RnnParams(
        w_in=draw(n_hidden, n_input, n_input),
        w_rec=draw(n_hidden, n_hidden, n_hidden),
        w_out=draw(n_classes, n_hidden, n_hidden),
        b_out=np.zeros(n_classes, dtype=dtype),
    )


def _check_sequence(sequence) -> np.ndarray:
    seq = np.asarray(sequence)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise EmptySequenceError(f"need a (T, inputs) sequence with T >= 1, got shape {seq.shape}")
    if not np.all(np.isfinite(seq)):
        raise NonFiniteInputError("sequence contains NaN or infinity")
    return seq


def forward(params: RnnParams, sequence) -> tuple[HiddenTrajectory, np.ndarray]:
    """Run the recurrence over one sequence.

    Returns the full hidden trajectory and the logits read from the final
    state only.
    """
    seq = _check_sequence(sequence).astype(params.dtype, copy=False)
    t_len = seq.shape[0]
    states = np.empty((t_len, params.n_hidden), dtype=params.dtype)
    h = np.zeros(params.n_hidden, dtype=params.dtype)
    # strictly step-by-step so a run over any prefix performs the very same
    # float operations: hidden states on shared prefixes match bit-exactly
    for t in range(t_len):
        h = np.tanh(params.w_in @ seq[t] + params.w_rec @ h)
        states[t] = h
    # tanh keeps states inside [-1, 1]; float rounding can land exactly on
    # the endpoints once pre-activations saturate.
    assert np.all(np.abs(states) <= 1.0)
    logits = params.w_out @ states[-1] + params.b_out
    return HiddenTrajectory(states), logits


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def loss_and_dlogits(logits, label: int) -> tuple[float, np.ndarray]:
    """Cross-entropy of softmax(logits) against `label`, with its gradient.

    loss = -log softmax(logits)[label]; dlogits = softmax(logits) - onehot.
    Computed in double precision whatever the input dtype.
    """
    logits = np.asarray(logits, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise NonFiniteInputError("logits contain NaN or infinity")
    if not 0 <= int(label) < logits.shape[-1]:
        raise InvalidLabelError(f"label {label} outside 0..{logits.shape[-1] - 1}")
    p = softmax(logits)
    loss = -np.log(max(float(p[int(label)]), PROB_FLOOR))
    dlogits = p.copy()
    dlogits[int(label)] -= 1.0
    return float(loss), dlogits


def _batch_loss_dlogits(logits: np.ndarray, labels: np.ndarray):
    """Vectorized softmax cross-entropy over a batch of logit rows."""
    p = softmax(logits)
    n = logits.shape[0]
    picked = np.maximum(p[np.arange(n), labels], PROB_FLOOR)
    losses = -np.log(picked)
    dlogits = p
    dlogits[np.arange(n), labels] -= 1.0
    return losses, dlogits


def bptt(params: RnnParams, sequence, label: int, readout_step: int | None = None):
    """Loss and full BPTT gradients for one sequence.

    The readout is taken from the final state; `readout_step`, when given,
    must equal the sequence length. Through-time Jacobians use
    diag(1 - h_t^2); w_in and w_rec gradients accumulate over all steps.
    """
    seq = _check_sequence(sequence).astype(params.dtype, copy=False)
    t_len = seq.shape[0]
    if readout_step is not None and readout_step != t_len:
        raise ReadoutOutOfRangeError(
            f"training readout must be the final step {t_len}, got {readout_step}"
        )
    traj, logits = forward(params, seq)
    states = traj.states
    loss, dlogits = loss_and_dlogits(logits, label)

    h_last = states[-1]
    g_out = np.outer(dlogits, h_last).astype(params.dtype)
    g_bout = dlogits.astype(params.dtype)
    g_in = np.zeros_like(params.w_in)
    g_rec = np.zeros_like(params.w_rec)

    dh = params.w_out.T @ dlogits.astype(params.dtype)
    for t in range(t_len - 1, -1, -1):
        dz = dh * (1.0 - states[t] * states[t])
        g_in += np.outer(dz, seq[t])
        h_prev = states[t - 1] if t > 0 else np.zeros_like(states[0])
        g_rec += np.outer(dz, h_prev)
        dh = params.w_rec.T @ dz
    return loss, Gradients(g_in, g_rec, g_out, g_bout)


def bptt_batch(params: RnnParams, sequences: np.ndarray, labels: np.ndarray):
    """Mean loss, batch-mean gradients and per-example predictions.

    sequences: (n, T, inputs); labels: (n,). Gradients are those of the
    mean cross-entropy over the batch, so they are batch-size comparable.
    """
    seqs = np.asarray(sequences)
    if seqs.ndim != 3 or seqs.shape[0] < 1 or seqs.shape[1] < 1:
        raise EmptySequenceError(f"need (n, T, inputs) with n, T >= 1, got {seqs.shape}")
    if not np.all(np.isfinite(seqs)):
        raise NonFiniteInputError("batch contains NaN or infinity")
    seqs = seqs.astype(params.dtype, copy=False)
    n, t_len, _ = seqs.shape

    proj = seqs @ params.w_in.T  # (n, T, hidden)
    states = np.empty((n, t_len, params.n_hidden), dtype=params.dtype)
    h = np.zeros((n, params.n_hidden), dtype=params.dtype)
    for t in range(t_len):
        h = np.tanh(proj[:, t, :] + h @ params.w_rec.T)
        states[:, t, :] = h

    logits = h @ params.w_out.T + params.b_out
    losses, dlogits = _batch_loss_dlogits(logits.astype(np.float64), labels)
    preds = np.argmax(logits, axis=1)
    dlogits = (dlogits / n).astype(params.dtype)

    g_out = dlogits.T @ h
    g_bout = dlogits.sum(axis=0)
    g_in = np.zeros_like(params.w_in)
    g_rec = np.zeros_like(params.w_rec)
    dh = dlogits @ params.w_out
    for t in range(t_len - 1, -1, -1):
        h_t = states[:, t, :]
        dz = dh * (1.0 - h_t * h_t)
        g_in += dz.T @ seqs[:, t, :]
        if t > 0:
            g_rec += dz.T @ states[:, t - 1, :]
        dh = dz @ params.w_rec
    return float(losses.mean()), Gradients(g_in, g_rec, g_out, g_bout), preds


@dataclass
class AdamState:
    """First/second-moment accumulators plus the step counter."""

    m: Gradients
    v: Gradients
    step_count: int
    lr: float
    beta1: float
    beta2: float
    eps: float


def init_adam(
    params: RnnParams,
    lr: float = 1e-3,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    def zeros():
        return Gradients(
            np.zeros_like(params.w_in),
            np.zeros_like(params.w_rec),
            np.zeros_like(params.w_out),
            np.zeros_like(params.b_out),
        )

    return AdamState(m=zeros(), v=zeros(), step_count=0, lr=lr, beta1=beta1, beta2=beta2, eps=eps)


def adam_step(params: RnnParams, grads: Gradients, state: AdamState):
    """One Adam update with bias-corrected moments.

    m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
    theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
    """
    for g in grads.arrays().values():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError("gradient contains NaN or infinity")
    t = state.step_count + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t

    new_params, new_m, new_v = {}, {}, {}
    for (name, theta), g, m, v in zip(
        params.arrays().items(),
        grads.arrays().values(),
        state.m.arrays().values(),
        state.v.arrays().values(),
    ):
        m = state.beta1 * m + (1.0 - state.beta1) * g
        v = state.beta2 * v + (1.0 - state.beta2) * (g * g)
        update = state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_params[name] = theta - update
        new_m[name] = m
        new_v[name] = v

    params_out = RnnParams(**new_params)
    state_out = AdamState(
        m=Gradients(*new_m.values()),
        v=Gradients(*new_v.values()),
        step_count=t,
        lr=state.lr,
        beta1=state.beta1,
        beta2=state.beta2,
        eps=state.eps,
    )
    return params_out, state_out


def predict(params: RnnParams, sequence, readout_step: int | None = None) -> int:
    """Class with the largest readout at `readout_step` (default: final step).

    Exact logit ties break toward the lowest class index.
    """
    traj, _ = forward(params, sequence)
    t_len = len(traj)
    step = t_len if readout_step is None else readout_step
    if not 1 <= step <= t_len:
        raise ReadoutOutOfRangeError(f"readout step {step} outside 1..{t_len}")
    logits = params.w_out @ traj.states[step - 1] + params.b_out
    return int(np.argmax(logits))
