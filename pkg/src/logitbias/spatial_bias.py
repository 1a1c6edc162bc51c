"""Spatial bias learner: class-relevance scoring of the feature grid,
Top-K region selection, and entropy-minimized additive logit correction
over the selected regions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptySelection
from .numerics import TTATrace, cosine_logits, descend_mean_entropy, l2_normalize_rows, softmax


@dataclass(frozen=True)
class SpatialConfig:
    """Learning rate, region count, step count, and relevance-map temperature.

    beta=0 or steps=0 makes the learner a no-op (zero bias). topk is
    clamped to the grid size when the grid is small.
    """

    beta: float = 1.0
    topk: int = 16
    steps: int = 5
    map_temperature: float = 1.0

    def __post_init__(self) -> None:
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.topk < 1:
            raise ValueError(f"topk must be >= 1, got {self.topk}")
        if self.steps < 0:
            raise ValueError(f"steps must be >= 0, got {self.steps}")
        if self.map_temperature <= 0:
            raise ValueError(f"map_temperature must be > 0, got {self.map_temperature}")


def spatial_logits(
    spatial_features: np.ndarray, class_embeddings: np.ndarray, tau: float
) -> np.ndarray:
    """Per-region cosine logits against the class embeddings ((w*h) x C)."""
    return cosine_logits(spatial_features, class_embeddings, tau)


def category_aware_map(
    spatial_features: np.ndarray,
    class_embeddings: np.ndarray,
    map_temperature: float = 1.0,
) -> np.ndarray:
    """Class-relevance distribution over grid positions.

    For each class, softmax the cosine similarities over the w*h
    positions, then average the per-class distributions. The result is
    a length-(w*h) vector summing to 1.
    """
    if map_temperature <= 0:
        raise ValueError(f"map_temperature must be > 0, got {map_temperature}")
    f = np.atleast_2d(np.asarray(spatial_features, dtype=np.float64))
    t = np.atleast_2d(np.asarray(class_embeddings, dtype=np.float64))
    if f.shape[1] != t.shape[1]:
        raise DimensionMismatch(f"spatial dim {f.shape[1]} != class dim {t.shape[1]}")
    sim = l2_normalize_rows(f) @ l2_normalize_rows(t).T / map_temperature  # (w*h) x C
    per_class = softmax(sim.T)  # C x (w*h): each row a distribution over positions
    return per_class.mean(axis=0)


def topk_regions(relevance_map: np.ndarray, k: int) -> list[int]:
    """Indices of the min(k, w*h) largest map values.

    Ties break toward the lower index; the result is sorted ascending by
    index.
    """
    m = np.asarray(relevance_map, dtype=np.float64).ravel()
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    keep = min(k, m.shape[0])
    order = np.argsort(-m, kind="stable")  # stable: ties keep lower index first
    return sorted(int(i) for i in order[:keep])


def learn_spatial_bias(
    region_logits: np.ndarray, selected: list[int], cfg: SpatialConfig
) -> tuple[np.ndarray, TTATrace]:
    """Descend the entropy of the mean distribution over selected regions.

    The selection is frozen for the whole run; the bias starts at zero
    and follows plain gradient descent with learning rate beta.
    """
    logits = np.atleast_2d(np.asarray(region_logits, dtype=np.float64))
    if len(selected) == 0:
        raise EmptySelection("no regions selected")
    indices = list(selected)
    if any(i < 0 or i >= logits.shape[0] for i in indices):
        raise EmptySelection(f"region index out of range for {logits.shape[0]} regions")
    bias, entropies, norms = descend_mean_entropy(logits[indices], cfg.beta, cfg.steps)
    return bias, TTATrace(entropies=entropies, bias_norms=norms, kept_indices=indices)


def significant_region_count(relevance_map: np.ndarray, threshold: float = 0.1) -> int:
    """Count regions whose min-max-normalized map value exceeds the threshold.

    A constant map normalizes degenerately (max == min) and counts as 0:
    no region is distinguished.
    """
    m = np.asarray(relevance_map, dtype=np.float64).ravel()
    lo = float(m.min())
    hi = float(m.max())
    if hi == lo:
        return 0
    return int(np.count_nonzero((m - lo) / (hi - lo) > threshold))
