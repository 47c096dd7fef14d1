"""On-disk feature-bundle format: readers, writers, validation.

A bundle directory holds one dataset's worth of classifier outputs:

    features.fsb   m x d float32 matrix ("FSB1" container)
    logits.fsb     m x k float32 matrix ("FSB1" container)
    labels.fsl     optional m uint32 labels ("FSL1" container)
    meta.json      name, shift family, severity, class count, optional
                   true error

Both binary containers are little-endian throughout. The matrix
container is 4 magic bytes ``FSB1``, u32 version (= 1), u64 rows, u64
cols, then rows*cols IEEE-754 binary32 values in row-major order. The
label container is 4 magic bytes ``FSL1``, u32 version (= 1), u64
count, then count u32 values. Payloads are written byte-exactly, so a
read-after-write round trip reproduces every array bit for bit.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadMagic,
    DimensionMismatch,
    InvariantViolation,
    IoError,
    MetaParseError,
    MissingFile,
    NonFiniteValue,
)

MATRIX_MAGIC = b"FSB1"
LABEL_MAGIC = b"FSL1"
FORMAT_VERSION = 1

FEATURES_FILE = "features.fsb"
LOGITS_FILE = "logits.fsb"
LABELS_FILE = "labels.fsl"
META_FILE = "meta.json"

_MATRIX_HEADER = struct.Struct("<4sIQQ")
_LABEL_HEADER = struct.Struct("<4sIQ")


@dataclass
class DatasetMeta:
    """Descriptive metadata for one bundle."""

    name: str
    shift_family: str
    severity: int
    k: int
    true_error: float | None = None

    def check(self) -> None:
        if not isinstance(self.name, str) or not isinstance(self.shift_family, str):
            raise MetaParseError("meta: name and shift_family must be strings")
        if isinstance(self.severity, bool) or not isinstance(self.severity, int) or self.severity < 0:
            raise MetaParseError(f"meta: severity must be an integer >= 0, got {self.severity!r}")
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 2:
            raise MetaParseError(f"meta: k must be an integer >= 2, got {self.k!r}")
        if self.true_error is not None:
            if not isinstance(self.true_error, (int, float)) or isinstance(self.true_error, bool):
                raise MetaParseError("meta: true_error must be a number")
            if not 0.0 <= float(self.true_error) <= 1.0:
                raise MetaParseError(f"meta: true_error {self.true_error} outside [0, 1]")

    def to_json_dict(self) -> dict:
        out = {
            "name": self.name,
            "shift_family": self.shift_family,
            "severity": self.severity,
            "k": self.k,
        }
        if self.true_error is not None:
            out["true_error"] = float(self.true_error)
        return out


@dataclass
class FeatureBundle:
    """One dataset's features, logits, optional labels, and metadata.

    Arrays are stored in the file dtypes (float32 matrices, integer
    labels) so that a write/read round trip is bit-exact.
    """

    features: np.ndarray
    logits: np.ndarray
    meta: DatasetMeta
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.features = np.ascontiguousarray(self.features, dtype=np.float32)
        self.logits = np.ascontiguousarray(self.logits, dtype=np.float32)
        if self.labels is not None:
            self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)

    @property
    def m(self) -> int:
        return int(self.features.shape[0])

    @property
    def d(self) -> int:
        return int(self.features.shape[1])

    def check(self) -> None:
        """Raise if any typed invariant is violated."""
        self.meta.check()
        if self.features.ndim != 2 or self.logits.ndim != 2:
            raise InvariantViolation("features and logits must be 2-D matrices")
        if self.features.shape[0] < 1:
            raise InvariantViolation("bundle has no rows")
        if self.features.shape[1] < 1:
            raise InvariantViolation("features must have at least one column")
        if self.logits.shape[0] != self.features.shape[0]:
            raise DimensionMismatch(
                f"features rows ({self.features.shape[0]}) != logits rows ({self.logits.shape[0]})"
            )
        if self.logits.shape[1] != self.meta.k:
            raise DimensionMismatch(
                f"logits columns ({self.logits.shape[1]}) != meta.k ({self.meta.k})"
            )
        if not np.isfinite(self.features).all():
            raise NonFiniteValue("features contain NaN or Inf")
        if not np.isfinite(self.logits).all():
            raise NonFiniteValue("logits contain NaN or Inf")
        if self.labels is not None:
            if self.labels.ndim != 1 or self.labels.shape[0] != self.features.shape[0]:
                raise DimensionMismatch(
                    f"labels length ({self.labels.shape[0]}) != rows ({self.features.shape[0]})"
                )
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.meta.k):
                raise InvariantViolation(
                    f"label out of range: values must lie in [0, {self.meta.k})"
                )


@dataclass
class Manifest:
    """A reference bundle plus an ordered list of test bundles."""

    reference: str
    tests: list[str] = field(default_factory=list)
    k: int = 2

    def to_json_dict(self) -> dict:
        return {"reference": self.reference, "tests": list(self.tests), "k": self.k}


# --- binary containers --------------------------------------------------------


def write_matrix(path: Path | str, array: np.ndarray) -> None:
    """Write a 2-D float32 matrix in the FSB1 container format."""
    arr = np.ascontiguousarray(array, dtype=np.float32)
    if arr.ndim != 2:
        raise InvariantViolation(f"matrix must be 2-D, got shape {arr.shape}")
    header = _MATRIX_HEADER.pack(MATRIX_MAGIC, FORMAT_VERSION, arr.shape[0], arr.shape[1])
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(arr.tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_matrix(path: Path | str) -> np.ndarray:
    """Read an FSB1 matrix file back into a float32 array."""
    name = Path(path).name
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise MissingFile(f"{name}: file not found") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if data[:4] != MATRIX_MAGIC:
        raise BadMagic(f"{name}: expected magic {MATRIX_MAGIC!r}, got {data[:4]!r}")
    if len(data) < _MATRIX_HEADER.size:
        raise IoError(f"{name}: unexpected end of file in header")
    _, version, rows, cols = _MATRIX_HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise BadMagic(f"{name}: unsupported version {version}")
    expected = _MATRIX_HEADER.size + rows * cols * 4
    if len(data) < expected:
        raise IoError(f"{name}: unexpected end of file (have {len(data)} bytes, need {expected})")
    if len(data) > expected:
        raise IoError(f"{name}: {len(data) - expected} trailing bytes after payload")
    flat = np.frombuffer(data, dtype="<f4", offset=_MATRIX_HEADER.size)
    return flat.reshape(rows, cols).copy()


def write_labels(path: Path | str, labels: np.ndarray) -> None:
    """Write a label vector in the FSL1 container format."""
    lab = np.ascontiguousarray(labels, dtype=np.int64)
    if lab.ndim != 1:
        raise InvariantViolation(f"labels must be 1-D, got shape {lab.shape}")
    if lab.size and (lab.min() < 0 or lab.max() > 0xFFFFFFFF):
        raise InvariantViolation("labels must fit in an unsigned 32-bit integer")
    header = _LABEL_HEADER.pack(LABEL_MAGIC, FORMAT_VERSION, lab.shape[0])
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(lab.astype("<u4").tobytes(order="C"))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_labels(path: Path | str) -> np.ndarray:
    """Read an FSL1 label file back into an int64 vector."""
    name = Path(path).name
    try:
        data = Path(path).read_bytes()
    except FileNotFoundError as exc:
        raise MissingFile(f"{name}: file not found") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if data[:4] != LABEL_MAGIC:
        raise BadMagic(f"{name}: expected magic {LABEL_MAGIC!r}, got {data[:4]!r}")
    if len(data) < _LABEL_HEADER.size:
        raise IoError(f"{name}: unexpected end of file in header")
    _, version, count = _LABEL_HEADER.unpack_from(data)
    if version != FORMAT_VERSION:
        raise BadMagic(f"{name}: unsupported version {version}")
    expected = _LABEL_HEADER.size + count * 4
    if len(data) < expected:
        raise IoError(f"{name}: unexpected end of file (have {len(data)} bytes, need {expected})")
    if len(data) > expected:
        raise IoError(f"{name}: {len(data) - expected} trailing bytes after payload")
    return np.frombuffer(data, dtype="<u4", offset=_LABEL_HEADER.size).astype(np.int64)


# --- meta / manifest ----------------------------------------------------------


def _parse_meta(text: str) -> DatasetMeta:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MetaParseError(f"meta.json: invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MetaParseError("meta.json: top level must be an object")
    missing = [key for key in ("name", "shift_family", "severity", "k") if key not in raw]
    if missing:
        raise MetaParseError(f"meta.json: missing keys {missing}")
    meta = DatasetMeta(
        name=raw["name"],
        shift_family=raw["shift_family"],
        severity=raw["severity"],
        k=raw["k"],
        true_error=raw.get("true_error"),
    )
    meta.check()
    return meta


def read_meta(path: Path | str) -> DatasetMeta:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise MissingFile(f"{META_FILE}: file not found") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    return _parse_meta(text)


def write_meta(path: Path | str, meta: DatasetMeta) -> None:
    meta.check()
    try:
        Path(path).write_text(json.dumps(meta.to_json_dict(), indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_manifest(path: Path | str) -> Manifest:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise MissingFile(f"{path}: file not found") from exc
    except json.JSONDecodeError as exc:
        raise MetaParseError(f"{path}: invalid JSON: {exc}") from exc
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise MetaParseError(f"{path}: top level must be an object")
    for key in ("reference", "tests", "k"):
        if key not in raw:
            raise MetaParseError(f"{path}: missing key {key!r}")
    if not isinstance(raw["reference"], str):
        raise MetaParseError(f"{path}: reference must be a string path")
    if not isinstance(raw["tests"], list) or not all(isinstance(t, str) for t in raw["tests"]):
        raise MetaParseError(f"{path}: tests must be a list of string paths")
    if isinstance(raw["k"], bool) or not isinstance(raw["k"], int):
        raise MetaParseError(f"{path}: k must be an integer")
    return Manifest(reference=raw["reference"], tests=list(raw["tests"]), k=raw["k"])


def write_manifest(path: Path | str, manifest: Manifest) -> None:
    try:
        Path(path).write_text(
            json.dumps(manifest.to_json_dict(), indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# --- bundle operations --------------------------------------------------------


def write_bundle(bundle: FeatureBundle, directory: Path | str) -> None:
    """Write a validated bundle into ``directory`` (created if needed)."""
    bundle.check()
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {directory}: {exc}") from exc
    write_matrix(directory / FEATURES_FILE, bundle.features)
    write_matrix(directory / LOGITS_FILE, bundle.logits)
    if bundle.labels is not None:
        write_labels(directory / LABELS_FILE, bundle.labels)
    write_meta(directory / META_FILE, bundle.meta)


def read_bundle(directory: Path | str) -> FeatureBundle:
    """Read a bundle directory, enforcing every typed invariant."""
    directory = Path(directory)
    for required in (FEATURES_FILE, LOGITS_FILE, META_FILE):
        if not (directory / required).is_file():
            raise MissingFile(f"{required}: file not found in {directory}")
    features = read_matrix(directory / FEATURES_FILE)
    logits = read_matrix(directory / LOGITS_FILE)
    meta = read_meta(directory / META_FILE)
    labels = None
    labels_path = directory / LABELS_FILE
    if labels_path.is_file():
        labels = read_labels(labels_path)
    bundle = FeatureBundle(features=features, logits=logits, meta=meta, labels=labels)
    bundle.check()
    return bundle


def validate_bundle(directory: Path | str) -> list[str]:
    """Return violation descriptions; empty iff read_bundle would succeed."""
    directory = Path(directory)
    violations = [
        f"{required}: file not found in {directory}"
        for required in (FEATURES_FILE, LOGITS_FILE, META_FILE)
        if not (directory / required).is_file()
    ]
    if violations:
        return violations
    try:
        read_bundle(directory)
    except Exception as exc:  # noqa: BLE001 - every failure becomes a finding
        return [str(exc)]
    return []
