"""Exact (all-pairs) t-SNE for embedding hidden states in two dimensions.

Conditional Gaussian affinities are calibrated per row by binary search so
each row's Shannon perplexity (2^entropy) lands within 1e-3 of the target,
then symmetrized: P = (P_cond + P_cond^T) / 2n. The low-dimensional kernel
is Student-t with one degree of freedom. Optimization is plain gradient
descent with momentum 0.5 for the first 250 iterations and 0.8 after, with
the affinities multiplied by 12 (early exaggeration) during those first
250 iterations. The embedding starts from seeded Gaussian noise with
sigma = 1e-4.

Everything runs in double precision; identical seeds give bit-identical
embeddings.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import StateMatrix

PERPLEXITY_TOL = 1e-3
EXAGGERATION = 12.0
EXAGGERATION_ITERS = 250
MOMENTUM_SWITCH = 250
INITIAL_MOMENTUM = 0.5
FINAL_MOMENTUM = 0.8
INIT_SIGMA = 1e-4
_EPS = 1e-12


class PerplexityTooLargeError(ValueError):
    pass


class NonFiniteEmbeddingError(FloatingPointError):
    def __init__(self, iteration: int):
        super().__init__(f"embedding diverged to non-finite values at iteration {iteration}")
        self.iteration = iteration


@dataclass
class EmbeddingResult:
    points: np.ndarray  # (n, 2)
    labels: np.ndarray
    perplexity: float
    iterations: int
    kl_divergence: float
    seed: int
    kl_trace: np.ndarray  # KL against the plain (unexaggerated) P, per iteration


def pairwise_sq_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    np.fill_diagonal(d2, 0.0)
    return d2


def _row_perplexity(d2_row: np.ndarray, beta: float):
    """Conditional affinities exp(-beta d^2) for one row and their
    perplexity 2^H. The row excludes the self-distance."""
    p = np.exp(-beta * d2_row)
    total = p.sum()
    if total <= 0.0:
        return np.zeros_like(p), 0.0
    p /= total
    nz = p > 0
    entropy_bits = -np.sum(p[nz] * np.log2(p[nz]))
    return p, float(2.0**entropy_bits)


def conditional_affinities(
    d2: np.ndarray, perplexity: float, tol: float = PERPLEXITY_TOL, max_iter: int = 200
):
    """Per-row Gaussian affinities calibrated to the target perplexity.

    Returns the zero-diagonal conditional matrix and the realized per-row
    perplexities.
    """
    n = d2.shape[0]
    p_cond = np.zeros((n, n), dtype=np.float64)
    realized = np.zeros(n, dtype=np.float64)
    others = np.arange(n)
    for i in range(n):
        row = d2[i, np.concatenate([others[:i], others[i + 1 :]])]
        beta, lo, hi = 1.0, 0.0, np.inf
        p, perp = _row_perplexity(row, beta)
        for _ in range(max_iter):
            if abs(perp - perplexity) <= tol:
                break
            if perp > perplexity:  # too spread out: sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = beta / 2.0 if lo == 0.0 else 0.5 * (beta + lo)
            p, perp = _row_perplexity(row, beta)
        p_cond[i, :i] = p[:i]
        p_cond[i, i + 1 :] = p[i:]
        realized[i] = perp
    return p_cond, realized


def joint_affinities(x: np.ndarray, perplexity: float, tol: float = PERPLEXITY_TOL):
    """Symmetrized affinity matrix P; entries sum to 1, zero diagonal."""
    p_cond, realized = conditional_affinities(pairwise_sq_distances(x), perplexity, tol)
    n = x.shape[0]
    p = (p_cond + p_cond.T) / (2.0 * n)
    return p, realized


def _student_t_q(y: np.ndarray):
    """Student-t (1 d.o.f.) kernel weights and normalized affinities."""
    w = 1.0 / (1.0 + pairwise_sq_distances(y))
    np.fill_diagonal(w, 0.0)
    q = np.maximum(w / w.sum(), _EPS)
    return w, q


def kl_divergence_and_grad(p: np.ndarray, y: np.ndarray):
    """KL(P || Q) of the embedding y under the Student-t kernel, with its
    gradient dC/dy. Pure function shared by the descent loop and the
    finite-difference oracle tests."""
    y = np.asarray(y, dtype=np.float64)
    w, q = _student_t_q(y)
    mask = p > 0
    kl = float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    m = (p - q) * w
    grad = 4.0 * (y * m.sum(axis=1)[:, None] - m @ y)
    return kl, grad


def tsne(
    states: StateMatrix,
    perplexity: float = 30.0,
    iterations: int = 1000,
    seed: int = 0,
    learning_rate: float = 200.0,
) -> EmbeddingResult:
    """Embed one StateMatrix into 2-D with exact t-SNE."""
    x = np.asarray(states.states, dtype=np.float64)
    n = x.shape[0]
    if perplexity <= 1.0:
        raise PerplexityTooLargeError(f"perplexity must exceed 1, got {perplexity}")
    if n < 3 * perplexity + 1:
        raise PerplexityTooLargeError(
            f"perplexity {perplexity} needs at least {int(3 * perplexity + 1)} rows, got {n}"
        )
    if iterations < 1:
        raise ValueError("iterations must be >= 1")

    p_plain, _ = joint_affinities(x, perplexity)
    mask = p_plain > 0
    log_p = np.log(p_plain[mask])
    p_masked = p_plain[mask]

    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, INIT_SIGMA, size=(n, 2))
    update = np.zeros_like(y)
    # kl_trace[i] is the unexaggerated objective after update i + 1, so the
    # last entry describes the returned embedding.
    kl_trace = np.empty(iterations, dtype=np.float64)

    def plain_kl(q):
        return float(np.sum(p_masked * (log_p - np.log(q[mask]))))

    for it in range(iterations):
        factor = EXAGGERATION if it < EXAGGERATION_ITERS else 1.0
        w, q = _student_t_q(y)
        if it > 0:
            kl_trace[it - 1] = plain_kl(q)
        m = (factor * p_plain - q) * w
        grad = 4.0 * (y * m.sum(axis=1)[:, None] - m @ y)
        momentum = INITIAL_MOMENTUM if it < MOMENTUM_SWITCH else FINAL_MOMENTUM
        update = momentum * update - learning_rate * grad
        y = y + update
        if not np.all(np.isfinite(y)):
            raise NonFiniteEmbeddingError(it)
    _, q = _student_t_q(y)
    kl_trace[iterations - 1] = plain_kl(q)

    return EmbeddingResult(
        points=y,
        labels=states.labels.copy(),
        perplexity=perplexity,
        iterations=iterations,
        kl_divergence=float(kl_trace[-1]),
        seed=seed,
        kl_trace=kl_trace,
    )
