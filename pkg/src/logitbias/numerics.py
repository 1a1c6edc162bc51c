"""Dense small-matrix kernels shared by the global and spatial bias learners.

All functions accept array-likes, upcast to float64 internally, and are
pure: no shared mutable state, safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonPositiveTemperature, ZeroRowNorm

# Clamp inside log() so entropy and its gradient stay finite when a class
# probability underflows to zero.
LOG_EPS = 1e-12

# Row norms below this are treated as zero vectors (no direction).
NORM_EPS = 1e-12


def l2_normalize_rows(matrix: np.ndarray) -> np.ndarray:
    """Scale each row to unit Euclidean norm."""
    m = np.asarray(matrix, dtype=np.float64)
    norms = np.linalg.norm(m, axis=-1, keepdims=True)
    if np.any(norms < NORM_EPS):
        bad = int(np.argmin(norms))
        raise ZeroRowNorm(f"row {bad} has near-zero norm ({float(norms.flat[bad]):.3e})")
    return m / norms


def cosine_logits(features: np.ndarray, class_embeddings: np.ndarray, tau: float) -> np.ndarray:
    """Temperature-scaled cosine similarity logits.

    Entry (i, c) is cos(features[i], class_embeddings[c]) / tau, so every
    entry lies in [-1/tau, 1/tau].
    """
    if tau <= 0:
        raise NonPositiveTemperature(f"temperature must be > 0, got {tau}")
    f = np.atleast_2d(np.asarray(features, dtype=np.float64))
    t = np.atleast_2d(np.asarray(class_embeddings, dtype=np.float64))
    if f.shape[1] != t.shape[1]:
        raise DimensionMismatch(
            f"feature dim {f.shape[1]} != class embedding dim {t.shape[1]}"
        )
    return l2_normalize_rows(f) @ l2_normalize_rows(t).T / tau


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis (max-subtraction)."""
    z = np.asarray(logits, dtype=np.float64)
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def entropy(probs: np.ndarray) -> float:
    """Shannon entropy in nats, with probabilities clamped at LOG_EPS inside the log."""
    p = np.asarray(probs, dtype=np.float64)
    return float(-np.sum(p * np.log(np.maximum(p, LOG_EPS)), axis=-1))


def row_entropies(logits: np.ndarray) -> np.ndarray:
    """Self-entropy of softmax(row) for each row of a logit matrix."""
    p = softmax(np.atleast_2d(np.asarray(logits, dtype=np.float64)))
    return -np.sum(p * np.log(np.maximum(p, LOG_EPS)), axis=-1)


def _check_bias(logits: np.ndarray, bias: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    b = np.asarray(bias, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != z.shape[1]:
        raise DimensionMismatch(f"bias length {b.shape} does not match {z.shape[1]} classes")
    return z, b


def mean_softmax_entropy(logits: np.ndarray, bias: np.ndarray) -> tuple[np.ndarray, float]:
    """Mean of per-row softmax(row + bias) and its Shannon entropy.

    The bias is added in logit space before each row's softmax; the
    marginal distribution is the plain average of the renormalized rows.
    """
    z, b = _check_bias(logits, bias)
    p_mean = softmax(z + b).mean(axis=0)
    return p_mean, entropy(p_mean)


def mean_softmax_entropy_gradient(logits: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Closed-form gradient of mean_softmax_entropy's entropy w.r.t. the bias.

    With q_i = softmax(z_i + b), p = mean_i(q_i), and g = -(log(p) + 1):

        dH/db = (1/m) sum_i [ q_i * g - (q_i . g) q_i ]

    i.e. the entropy gradient g pushed through each row's softmax
    Jacobian. Constant shifts of g are annihilated, so the gradient is
    invariant to adding a constant to the bias.
    """
    z, b = _check_bias(logits, bias)
    q = softmax(z + b)                                  # m x C
    p_mean = q.mean(axis=0)
    g = -(np.log(np.maximum(p_mean, LOG_EPS)) + 1.0)    # C
    inner = q @ g                                       # m
    return (q * g - q * inner[:, None]).mean(axis=0)


@dataclass
class TTATrace:
    """Per-step diagnostics of one bias descent run.

    entropies[t] and bias_norms[t] are measured after update t+1;
    kept_indices is the frozen row selection the run operated on.
    """

    entropies: list[float] = field(default_factory=list)
    bias_norms: list[float] = field(default_factory=list)
    kept_indices: list[int] = field(default_factory=list)


def descend_mean_entropy(
    logits: np.ndarray, learning_rate: float, steps: int
) -> tuple[np.ndarray, list[float], list[float]]:
    """Plain gradient descent of the mean-softmax entropy from a zero bias.

    Returns the final bias plus per-step post-update entropies and bias
    L2 norms. steps=0 or learning_rate=0 leaves the bias at zero.
    """
    z = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    bias = np.zeros(z.shape[1], dtype=np.float64)
    entropies: list[float] = []
    norms: list[float] = []
    for _ in range(steps):
        grad = mean_softmax_entropy_gradient(z, bias)
        bias = bias - learning_rate * grad
        _, h = mean_softmax_entropy(z, bias)
        entropies.append(h)
        norms.append(float(np.linalg.norm(bias)))
    return bias, entropies, norms
