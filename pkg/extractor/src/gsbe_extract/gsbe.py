"""Writers for the GSBE container and manifest consumed by logitbias.

This module implements the wire format directly (magic "GSBE",
version 1, unsigned 32-bit little-endian integers, float32 tensors)
rather than importing the consumer package: the byte layout and the
manifest JSON schema are the interface contract between the two tools.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"GSBE"
VERSION = 1
KIND_CLASS_SET = 1
KIND_SAMPLE = 2


def _header(kind: int) -> bytes:
    return MAGIC + struct.pack("<II", VERSION, kind)


def write_class_file(destination, names: list[str], embeddings: np.ndarray) -> None:
    emb = np.ascontiguousarray(embeddings, dtype=np.float32)
    if emb.ndim != 2 or emb.shape[0] != len(names):
        raise ValueError(f"embeddings {emb.shape} do not match {len(names)} names")
    if len(names) < 2:
        raise ValueError("need at least 2 classes")
    if len(set(names)) != len(names) or any(not n for n in names):
        raise ValueError("class names must be unique and nonempty")
    if not np.all(np.isfinite(emb)):
        raise ValueError("class embeddings contain non-finite values")
    parts = [_header(KIND_CLASS_SET), struct.pack("<II", emb.shape[0], emb.shape[1])]
    parts.append(emb.astype("<f4", copy=False).tobytes(order="C"))
    for name in names:
        raw = name.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)) + raw)
    Path(destination).write_bytes(b"".join(parts))


def write_sample_file(
    destination,
    view_features: np.ndarray,
    spatial_features: np.ndarray,
    grid_w: int,
    grid_h: int,
    label: int = -1,
) -> None:
    views = np.ascontiguousarray(view_features, dtype=np.float32)
    spatial = np.ascontiguousarray(spatial_features, dtype=np.float32)
    if views.ndim != 2 or spatial.ndim != 2 or views.shape[1] != spatial.shape[1]:
        raise ValueError("view/spatial features must be 2-D with a shared dim")
    if spatial.shape[0] != grid_w * grid_h:
        raise ValueError(f"spatial rows {spatial.shape[0]} != {grid_w}*{grid_h}")
    if not (np.all(np.isfinite(views)) and np.all(np.isfinite(spatial))):
        raise ValueError("features contain non-finite values")
    parts = [
        _header(KIND_SAMPLE),
        struct.pack("<IIIIi", views.shape[0], views.shape[1], grid_w, grid_h, label),
        views.astype("<f4", copy=False).tobytes(order="C"),
        spatial.astype("<f4", copy=False).tobytes(order="C"),
    ]
    Path(destination).write_bytes(b"".join(parts))


def write_manifest(
    destination,
    dataset_name: str,
    class_file: str,
    samples: list[str],
    extraction: dict | None = None,
) -> None:
    doc: dict = {"dataset_name": dataset_name, "class_file": class_file, "samples": samples}
    if extraction is not None:
        doc["extraction"] = extraction
    Path(destination).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
