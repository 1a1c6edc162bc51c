"""Global bias learner: confidence-filtered augmented views drive an
entropy-minimized additive logit correction shared across views."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput
from .numerics import TTATrace, descend_mean_entropy, row_entropies


@dataclass(frozen=True)
class GlobalConfig:
    """Learning rate, view selection rate, and descent step count.

    alpha=0 or steps=0 makes the learner a no-op (zero bias).
    """

    alpha: float = 1.0
    rho: float = 0.5
    steps: int = 5

    def __post_init__(self) -> None:
        if self.alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")


def select_confident_views(view_logits: np.ndarray, rho: float) -> list[int]:
    """Indices of the max(1, floor(rho*N)) lowest-entropy views.

    Entropy ties break toward the lower view index; the result is sorted
    ascending by original index.
    """
    logits = np.atleast_2d(np.asarray(view_logits, dtype=np.float64))
    n = logits.shape[0]
    if n == 0:
        raise EmptyInput("no views to select from")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    keep = max(1, math.floor(rho * n))
    entropies = row_entropies(logits)
    order = np.argsort(entropies, kind="stable")  # stable: ties keep lower index first
    return sorted(int(i) for i in order[:keep])


def learn_global_bias(view_logits: np.ndarray, cfg: GlobalConfig) -> tuple[np.ndarray, TTATrace]:
    """Descend the entropy of the mean distribution over confident views.

    View selection happens once on the unbiased logits and stays frozen
    across steps; the bias starts at zero and follows plain gradient
    descent with learning rate alpha.
    """
    logits = np.atleast_2d(np.asarray(view_logits, dtype=np.float64))
    if logits.shape[1] < 2:
        raise DimensionMismatch(f"need >= 2 classes, got {logits.shape[1]}")
    kept = select_confident_views(logits, cfg.rho)
    bias, entropies, norms = descend_mean_entropy(logits[kept], cfg.alpha, cfg.steps)
    return bias, TTATrace(entropies=entropies, bias_norms=norms, kept_indices=kept)


def global_adjusted_logits(zero_shot_logits: np.ndarray, bias: np.ndarray) -> np.ndarray:
    """Add the learned global bias to the unadapted class logits."""
    z = np.asarray(zero_shot_logits, dtype=np.float64)
    b = np.asarray(bias, dtype=np.float64)
    if z.shape != b.shape:
        raise DimensionMismatch(f"logits shape {z.shape} != bias shape {b.shape}")
    return z + b
