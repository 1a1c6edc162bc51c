"""GSBE binary container for class embeddings and per-sample features.

Layout (all integers unsigned 32-bit little-endian unless noted, all
floats IEEE-754 single precision little-endian):

  header: magic "GSBE" | version=1 | kind (1=class set, 2=sample)
  kind 1: C | d | C*d floats row-major | C x (name byte-length, UTF-8 bytes)
  kind 2: N | d | w | h | label (signed 32-bit, -1=unknown)
          | N*d view floats (row 0 = unaugmented image)
          | w*h*d spatial floats (row-major positions, index = y*w + x)

Tensors are stored single precision; the adaptation core upcasts to
double internally. Write->read and read->write are bit-exact.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    InvalidRecord,
    IoFailure,
    MissingFile,
    ParseFailure,
    TruncatedFile,
    UnsupportedVersion,
)

MAGIC = b"GSBE"
VERSION = 1
KIND_CLASS_SET = 1
KIND_SAMPLE = 2


@dataclass
class ClassEmbeddingSet:
    """C class names with their C x d single-precision text embeddings."""

    names: list[str]
    embeddings: np.ndarray

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        self.embeddings = np.ascontiguousarray(self.embeddings, dtype=np.float32)
        if self.embeddings.ndim != 2:
            raise InvalidRecord("class embeddings must be a 2-D matrix")
        c, d = self.embeddings.shape
        if c < 2:
            raise InvalidRecord(f"need at least 2 classes, got {c}")
        if d < 1:
            raise InvalidRecord("embedding dim must be >= 1")
        if len(self.names) != c:
            raise InvalidRecord(f"{len(self.names)} names for {c} embedding rows")
        if any(not n for n in self.names):
            raise InvalidRecord("class names must be nonempty")
        if len(set(self.names)) != len(self.names):
            raise InvalidRecord("class names must be unique")
        if not np.all(np.isfinite(self.embeddings)):
            raise InvalidRecord("class embeddings contain non-finite values")

    @property
    def class_count(self) -> int:
        return self.embeddings.shape[0]

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]


@dataclass
class SampleRecord:
    """Per-view global features plus the unaugmented image's spatial grid.

    view_features row 0 is the unaugmented image by convention; the
    spatial grid is row-major over positions (index = y*w + x).
    label is a class index, or -1 when unknown.
    """

    view_features: np.ndarray
    spatial_features: np.ndarray
    grid_width: int
    grid_height: int
    label: int = -1

    def __post_init__(self) -> None:
        self.validate()

    def validate(self) -> None:
        self.view_features = np.ascontiguousarray(self.view_features, dtype=np.float32)
        self.spatial_features = np.ascontiguousarray(self.spatial_features, dtype=np.float32)
        if self.view_features.ndim != 2 or self.spatial_features.ndim != 2:
            raise InvalidRecord("view and spatial features must be 2-D matrices")
        if self.view_features.shape[0] < 1:
            raise InvalidRecord("need at least one view")
        if self.grid_width < 1 or self.grid_height < 1:
            raise InvalidRecord(f"bad grid {self.grid_width}x{self.grid_height}")
        if self.spatial_features.shape[0] != self.grid_width * self.grid_height:
            raise InvalidRecord(
                f"spatial rows {self.spatial_features.shape[0]} != "
                f"w*h = {self.grid_width * self.grid_height}"
            )
        if self.view_features.shape[1] != self.spatial_features.shape[1]:
            raise InvalidRecord("view and spatial feature dims differ")
        if self.label < -1:
            raise InvalidRecord(f"label must be -1 or a class index, got {self.label}")
        if not np.all(np.isfinite(self.view_features)) or not np.all(
            np.isfinite(self.spatial_features)
        ):
            raise InvalidRecord("sample features contain non-finite values")

    @property
    def view_count(self) -> int:
        return self.view_features.shape[0]

    @property
    def dim(self) -> int:
        return self.view_features.shape[1]


@dataclass
class DatasetManifest:
    """Ordered dataset listing: one class file plus sample file paths."""

    dataset_name: str
    class_file: Path
    sample_paths: list[Path]
    extra: dict = field(default_factory=dict)


class _ByteReader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}"
            )
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def i32(self) -> int:
        return struct.unpack("<i", self.take(4))[0]

    def floats(self, count: int, shape: tuple[int, int]) -> np.ndarray:
        raw = self.take(4 * count)
        return np.frombuffer(raw, dtype="<f4", count=count).reshape(shape)

    def done(self) -> None:
        if self.pos != len(self.data):
            raise InvalidRecord(f"{len(self.data) - self.pos} trailing bytes after record")


def _header(kind: int) -> bytes:
    return MAGIC + struct.pack("<II", VERSION, kind)


def _read_header(reader: _ByteReader, expected_kind: int | None = None) -> int:
    magic = reader.take(4)
    if magic != MAGIC:
        raise BadMagic(f"bad magic {magic!r}, expected {MAGIC!r}")
    version = reader.u32()
    if version != VERSION:
        raise UnsupportedVersion(f"unsupported container version {version}")
    kind = reader.u32()
    if kind not in (KIND_CLASS_SET, KIND_SAMPLE):
        raise InvalidRecord(f"unknown record kind {kind}")
    if expected_kind is not None and kind != expected_kind:
        raise InvalidRecord(f"expected kind {expected_kind}, found kind {kind}")
    return kind


def _write_bytes(destination, payload: bytes) -> None:
    try:
        Path(destination).write_bytes(payload)
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc


def _read_bytes(source) -> bytes:
    try:
        return Path(source).read_bytes()
    except OSError as exc:
        raise IoFailure(f"cannot read {source}: {exc}") from exc


def write_class_file(class_set: ClassEmbeddingSet, destination) -> None:
    """Serialize a validated class set; rewriting the same set is byte-identical."""
    class_set.validate()
    parts = [_header(KIND_CLASS_SET)]
    parts.append(struct.pack("<II", class_set.class_count, class_set.dim))
    parts.append(class_set.embeddings.astype("<f4", copy=False).tobytes(order="C"))
    for name in class_set.names:
        encoded = name.encode("utf-8")
        parts.append(struct.pack("<I", len(encoded)) + encoded)
    _write_bytes(destination, b"".join(parts))


def read_class_file(source) -> ClassEmbeddingSet:
    reader = _ByteReader(_read_bytes(source))
    _read_header(reader, KIND_CLASS_SET)
    c = reader.u32()
    d = reader.u32()
    embeddings = reader.floats(c * d, (c, d))
    names = []
    for _ in range(c):
        length = reader.u32()
        raw = reader.take(length)
        try:
            names.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise InvalidRecord(f"class name is not valid UTF-8: {exc}") from exc
    reader.done()
    return ClassEmbeddingSet(names=names, embeddings=embeddings)


def write_sample_file(record: SampleRecord, destination) -> None:
    record.validate()
    parts = [_header(KIND_SAMPLE)]
    parts.append(
        struct.pack(
            "<IIIIi",
            record.view_count,
            record.dim,
            record.grid_width,
            record.grid_height,
            record.label,
        )
    )
    parts.append(record.view_features.astype("<f4", copy=False).tobytes(order="C"))
    parts.append(record.spatial_features.astype("<f4", copy=False).tobytes(order="C"))
    _write_bytes(destination, b"".join(parts))


def read_sample_file(source) -> SampleRecord:
    reader = _ByteReader(_read_bytes(source))
    _read_header(reader, KIND_SAMPLE)
    n = reader.u32()
    d = reader.u32()
    w = reader.u32()
    h = reader.u32()
    label = reader.i32()
    views = reader.floats(n * d, (n, d))
    spatial = reader.floats(w * h * d, (w * h, d))
    reader.done()
    return SampleRecord(
        view_features=views,
        spatial_features=spatial,
        grid_width=w,
        grid_height=h,
        label=label,
    )


def peek_kind(source) -> int:
    """Read just the header and return the record kind."""
    reader = _ByteReader(_read_bytes(source))
    return _read_header(reader)


def read_manifest(source) -> DatasetManifest:
    """Parse a manifest JSON and resolve its paths against the manifest directory."""
    path = Path(source)
    if not path.is_file():
        raise MissingFile(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseFailure(f"cannot parse manifest {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseFailure(f"manifest {path} must be a JSON object")
    for key in ("dataset_name", "class_file", "samples"):
        if key not in doc:
            raise ParseFailure(f"manifest {path} is missing key '{key}'")
    if not isinstance(doc["dataset_name"], str):
        raise ParseFailure("manifest dataset_name must be a string")
    if not isinstance(doc["class_file"], str):
        raise ParseFailure("manifest class_file must be a string")
    samples = doc["samples"]
    if not isinstance(samples, list) or not all(isinstance(s, str) for s in samples):
        raise ParseFailure("manifest samples must be a list of paths")
    if not samples:
        raise ParseFailure("manifest must list at least one sample")

    base = path.parent
    class_file = base / doc["class_file"]
    if not class_file.is_file():
        raise MissingFile(f"class file not found: {class_file}")
    sample_paths = []
    for entry in samples:
        sample_path = base / entry
        if not sample_path.is_file():
            raise MissingFile(f"sample file not found: {sample_path}")
        sample_paths.append(sample_path)
    extra = {k: v for k, v in doc.items() if k not in ("dataset_name", "class_file", "samples")}
    return DatasetManifest(
        dataset_name=doc["dataset_name"],
        class_file=class_file,
        sample_paths=sample_paths,
        extra=extra,
    )


def write_manifest(
    destination,
    dataset_name: str,
    class_file: str,
    samples: list[str],
    extra: dict | None = None,
) -> None:
    """Write a manifest JSON with paths relative to the manifest's directory."""
    doc: dict = {"dataset_name": dataset_name, "class_file": class_file, "samples": samples}
    if extra:
        doc.update(extra)
    try:
        Path(destination).write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {destination}: {exc}") from exc
