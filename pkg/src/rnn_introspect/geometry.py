"""Hidden-state geometry: capture states across timesteps, measure linear
dimensionality via PCA explained variance, and score class separation with
a k-nearest-neighbor purity metric.

dim90 is the smallest number of principal components whose cumulative
explained-variance ratio reaches the 90% threshold (inclusive).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from .idx import SequenceDataset
from .rnn import RnnParams

DIM_THRESHOLD = 0.90
# Inclusive threshold: ratios like [0.6, 0.3, ...] must count as reaching
# 0.90 at two components even though 0.6 + 0.3 rounds just below 0.9.
_THRESHOLD_SLACK = 1e-12
CAPTURE_CHUNK = 2048


class TimestepOutOfRangeError(ValueError):
    pass


class KTooLargeError(ValueError):
    pass


@dataclass
class StateMatrix:
    """Hidden vectors captured at one timestep, one row per example."""

    states: np.ndarray  # (n, hidden)
    labels: np.ndarray  # (n,)
    timestep: int

    def __len__(self) -> int:
        return self.states.shape[0]


@dataclass
class SpectrumResult:
    explained_ratios: np.ndarray  # descending, sums to 1 (all zero if degenerate)
    dim90: int
    timestep: int | None
    scope: str | int  # "global" or a class index
    degenerate: bool = False


@dataclass
class TimestepSpectra:
    timestep: int
    overall: SpectrumResult
    per_class: list = field(default_factory=list)


def capture_states(
    params: RnnParams,
    dataset: SequenceDataset,
    timesteps,
    chunk: int = CAPTURE_CHUNK,
) -> dict:
    """One forward pass per example, recording h_t at each requested t.

    Returns {timestep: StateMatrix}; row order follows the dataset.
    """
    t_len = dataset.seq_len
    steps = sorted({int(t) for t in timesteps})
    if not steps:
        raise ValueError("need at least one timestep")
    if steps[0] < 1 or steps[-1] > t_len:
        raise TimestepOutOfRangeError(f"timesteps must lie in 1..{t_len}, got {steps}")

    n = len(dataset)
    seqs = dataset.sequences.astype(params.dtype, copy=False)
    captured = {t: np.empty((n, params.n_hidden), dtype=params.dtype) for t in steps}
    want = set(steps)
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        proj = seqs[lo:hi] @ params.w_in.T
        h = np.zeros((hi - lo, params.n_hidden), dtype=params.dtype)
        for t in range(1, max(steps) + 1):
            h = np.tanh(proj[:, t - 1, :] + h @ params.w_rec.T)
            if t in want:
                captured[t][lo:hi] = h
    return {
        t: StateMatrix(states=captured[t], labels=dataset.labels.copy(), timestep=t)
        for t in steps
    }


def _spectrum(matrix: np.ndarray):
    """Explained-variance ratios of the mean-centered rows, via SVD."""
    x = np.asarray(matrix, dtype=np.float64)
    centered = x - x.mean(axis=0)
    sv = np.linalg.svd(centered, compute_uv=False)
    var = sv * sv
    total = var.sum()
    if total == 0.0:
        return np.zeros_like(var), True
    return var / total, False


def pca_spectrum(
    states: StateMatrix, threshold: float = DIM_THRESHOLD, scope="global"
) -> SpectrumResult:
    """PCA explained-variance spectrum and dim90 of one state matrix.

    All-identical rows have no variance to explain: the result is flagged
    degenerate with dim90 = 0.
    """
    if len(states) < 2:
        raise ValueError(f"need at least 2 rows, got {len(states)}")
    ratios, degenerate = _spectrum(states.states)
    if degenerate:
        return SpectrumResult(ratios, 0, states.timestep, scope, degenerate=True)
    cumulative = np.cumsum(ratios)
    dim = int(np.searchsorted(cumulative, threshold - _THRESHOLD_SLACK) + 1)
    return SpectrumResult(ratios, dim, states.timestep, scope)


def per_class_spectra(states: StateMatrix, threshold: float = DIM_THRESHOLD) -> list:
    """pca_spectrum restricted to each class present (needs >= 2 examples;
    smaller classes are skipped with a warning)."""
    results = []
    for cls in np.unique(states.labels):
        mask = states.labels == cls
        if int(mask.sum()) < 2:
            warnings.warn(f"class {int(cls)} has fewer than 2 examples, skipped")
            continue
        subset = StateMatrix(states.states[mask], states.labels[mask], states.timestep)
        results.append(pca_spectrum(subset, threshold, scope=int(cls)))
    return results


def dimensionality_curve(
    params: RnnParams,
    dataset: SequenceDataset,
    timesteps=None,
    threshold: float = DIM_THRESHOLD,
) -> list:
    """Global and per-class dim90 at every requested timestep (default 1..T)."""
    if timesteps is None:
        timesteps = range(1, dataset.seq_len + 1)
    matrices = capture_states(params, dataset, timesteps)
    curve = []
    for t in sorted(matrices):
        sm = matrices[t]
        curve.append(
            TimestepSpectra(
                timestep=t,
                overall=pca_spectrum(sm, threshold),
                per_class=per_class_spectra(sm, threshold),
            )
        )
    return curve


def spectra_to_csv(curve: list) -> str:
    lines = ["timestep,scope,component_index,ratio,dim90"]
    for entry in curve:
        for result in [entry.overall, *entry.per_class]:
            for idx, ratio in enumerate(result.explained_ratios):
                lines.append(
                    f"{entry.timestep},{result.scope},{idx},{ratio!r},{result.dim90}"
                )
    return "\n".join(lines) + "\n"


def knn_purity(points: np.ndarray, labels: np.ndarray, k: int = 10) -> float:
    """Mean fraction of each point's k nearest neighbors (Euclidean,
    excluding the point itself) that share its label. Distance ties break
    toward the lower index."""
    pts = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    n = pts.shape[0]
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if k >= n:
        raise KTooLargeError(f"k = {k} needs at least {k + 1} points, got {n}")
    sq = np.sum(pts * pts, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.fill_diagonal(d2, np.inf)
    neighbors = np.argsort(d2, axis=1, kind="stable")[:, :k]
    matches = labels[neighbors] == labels[:, None]
    return float(matches.mean())


def stratified_subsample(dataset: SequenceDataset, size: int, seed: int = 0) -> SequenceDataset:
    """Seeded class-stratified subsample with largest-remainder rounding.

    Keeps class proportions as close as integer counts allow and preserves
    the original example order.
    """
    n = len(dataset)
    if not 1 <= size <= n:
        raise ValueError(f"subsample size {size} outside 1..{n}")
    classes, counts = np.unique(dataset.labels, return_counts=True)
    quotas = size * counts / n
    alloc = np.floor(quotas).astype(int)
    remainder = size - int(alloc.sum())
    if remainder > 0:
        order = np.argsort(-(quotas - alloc), kind="stable")
        alloc[order[:remainder]] += 1

    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5B5A]))
    chosen = []
    for cls, take in zip(classes, alloc):
        idx = np.flatnonzero(dataset.labels == cls)
        if take > 0:
            chosen.append(rng.choice(idx, size=take, replace=False))
    indices = np.sort(np.concatenate(chosen))
    return dataset.subset(indices)
