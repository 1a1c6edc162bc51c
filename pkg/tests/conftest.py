"""Shared fixture geometry for the test suite.

Most constructed inputs are 2-class records in a 2-D feature space with
identity class embeddings, so cosine similarities read off directly as
vector components and logit margins can be dialed in exactly.
"""

import math

import numpy as np
import pytest

from logitbias.container import ClassEmbeddingSet, SampleRecord


def unit_vector_with_margin(margin: float, favored: int) -> np.ndarray:
    """2-D unit vector whose cosine with the favored axis exceeds the other by margin."""
    hi = (margin + math.sqrt(2.0 - margin * margin)) / 2.0
    lo = hi - margin
    vec = np.array([hi, lo] if favored == 0 else [lo, hi], dtype=np.float64)
    return vec / np.linalg.norm(vec)


def two_class_embeddings() -> ClassEmbeddingSet:
    return ClassEmbeddingSet(names=["alpha", "beta"], embeddings=np.eye(2, dtype=np.float32))


def correction_record(
    weak_class: int = 0,
    strong_class: int = 1,
    n_aug: int = 8,
    grid: int = 4,
    weak_margin: float = 0.1,
    strong_margin: float = 1.0,
) -> SampleRecord:
    """Record whose original view weakly favors one class while every
    augmented view and every spatial region strongly favors the other."""
    weak = unit_vector_with_margin(weak_margin, weak_class)
    strong = unit_vector_with_margin(strong_margin, strong_class)
    views = np.vstack([weak] + [strong] * n_aug)
    spatial = np.tile(strong, (grid * grid, 1))
    return SampleRecord(
        view_features=views.astype(np.float32),
        spatial_features=spatial.astype(np.float32),
        grid_width=grid,
        grid_height=grid,
        label=strong_class,
    )


def random_record(
    rng: np.random.Generator,
    n_views: int = 4,
    grid_w: int = 3,
    grid_h: int = 3,
    dim: int = 8,
    label: int = -1,
) -> SampleRecord:
    views = rng.normal(size=(n_views, dim))
    spatial = rng.normal(size=(grid_w * grid_h, dim))
    return SampleRecord(
        view_features=(views / np.linalg.norm(views, axis=1, keepdims=True)).astype(np.float32),
        spatial_features=(spatial / np.linalg.norm(spatial, axis=1, keepdims=True)).astype(
            np.float32
        ),
        grid_width=grid_w,
        grid_height=grid_h,
        label=label,
    )


def random_classes(rng: np.random.Generator, n_classes: int = 5, dim: int = 8) -> ClassEmbeddingSet:
    emb = rng.normal(size=(n_classes, dim))
    emb /= np.linalg.norm(emb, axis=1, keepdims=True)
    return ClassEmbeddingSet(
        names=[f"class_{i}" for i in range(n_classes)], embeddings=emb.astype(np.float32)
    )


@pytest.fixture
def classes2():
    return two_class_embeddings()


@pytest.fixture
def correction_pair():
    """Two mirrored correction samples: zero-shot gets both wrong."""
    return [correction_record(weak_class=0, strong_class=1), correction_record(weak_class=1, strong_class=0)]
