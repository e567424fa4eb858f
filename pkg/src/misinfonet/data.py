"""File formats and dataset plumbing.

Binary embedding files (MREB), id/label CSVs, JSONL corpora, and the synthetic
class-separable dataset generator used by the self-contained test suite.
All binary formats are little-endian; text is UTF-8.
"""

import csv
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .tensor import seeded_rng


class FormatError(ValueError):
    """A file does not match its declared binary/text format."""


class MagicError(FormatError):
    pass


class VersionError(FormatError):
    pass


class TruncationError(FormatError):
    pass


class TrailingDataError(FormatError):
    pass


class ConsistencyError(FormatError):
    """Structurally valid file whose contents contradict each other."""


class DataError(ValueError):
    """Well-formed file with unusable content (duplicate ids, bad labels, ...)."""


EMB_MAGIC = b"MREB"
EMB_VERSION = 1


def write_embeddings(path, matrix):
    """Write a (n, dim) float matrix as an MREB file (f32 payload)."""
    matrix = np.asarray(matrix)
    if matrix.ndim != 2:
        raise DataError(f"embeddings must be 2-D, got shape {matrix.shape}")
    n, dim = matrix.shape
    with open(path, "wb") as fh:
        fh.write(EMB_MAGIC)
        fh.write(struct.pack("<III", EMB_VERSION, n, dim))
        fh.write(np.ascontiguousarray(matrix, dtype="<f4").tobytes())


def read_embeddings(path):
    """Read an MREB file back into a (n, dim) float32 matrix."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 4 or blob[:4] != EMB_MAGIC:
        raise MagicError(f"{path}: bad magic {blob[:4]!r}, expected {EMB_MAGIC!r}")
    if len(blob) < 16:
        raise TruncationError(f"{path}: header truncated at {len(blob)} bytes")
    version, n, dim = struct.unpack("<III", blob[4:16])
    if version != EMB_VERSION:
        raise VersionError(f"{path}: format version {version}, expected {EMB_VERSION}")
    expected = 16 + 4 * n * dim
    if len(blob) < expected:
        raise TruncationError(f"{path}: payload truncated, {len(blob)} of {expected} bytes")
    if len(blob) > expected:
        raise TrailingDataError(f"{path}: {len(blob) - expected} trailing bytes after payload")
    return np.frombuffer(blob, dtype="<f4", count=n * dim, offset=16).reshape(n, dim).copy()


def write_labels(path, ids, label_names):
    """Write an id,label CSV."""
    if len(ids) != len(label_names):
        raise DataError(f"ids ({len(ids)}) and labels ({len(label_names)}) differ in length")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "label"])
        for i, lab in zip(ids, label_names):
            w.writerow([i, lab])


@dataclass
class LabelFile:
    ids: list
    labels: np.ndarray  # contiguous class indices
    class_names: list   # sorted; index i maps to class_names[i]


def read_labels(path, class_names=None):
    """Read an id,label CSV; classes map to indices by lexicographic name order."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["id", "label"]:
        raise FormatError(f"{path}: expected header 'id,label', got {rows[0] if rows else 'empty file'}")
    ids, names = [], []
    seen = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 2:
            raise FormatError(f"{path}: line {lineno}: expected 2 fields, got {len(row)}")
        i, lab = row[0], row[1]
        if not i or not lab:
            raise DataError(f"{path}: line {lineno}: blank id or label")
        if i in seen:
            raise DataError(f"{path}: line {lineno}: duplicate id {i!r}")
        seen.add(i)
        ids.append(i)
        names.append(lab)
    if class_names is None:
        class_names = sorted(set(names))
    table = {c: k for k, c in enumerate(class_names)}
    try:
        labels = np.array([table[n] for n in names], dtype=np.int64)
    except KeyError as e:
        raise DataError(f"{path}: label {e.args[0]!r} not in the configured class set") from None
    return LabelFile(ids=ids, labels=labels, class_names=list(class_names))


@dataclass
class EmbeddingDataset:
    bart: np.ndarray      # (n, bart_dim) float32
    roberta: np.ndarray   # (n, roberta_dim) float32
    labels: np.ndarray    # (n,) int64
    class_names: list
    ids: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.labels)
        if self.bart.shape[0] != n or self.roberta.shape[0] != n:
            raise DataError(
                f"record counts disagree: bart {self.bart.shape[0]}, "
                f"roberta {self.roberta.shape[0]}, labels {n}")

    @property
    def n(self):
        return len(self.labels)


def load_dataset(bart_path, roberta_path, labels_path):
    """Load the three aligned files, cross-checking record counts."""
    bart = read_embeddings(bart_path)
    roberta = read_embeddings(roberta_path)
    lab = read_labels(labels_path)
    if not (bart.shape[0] == roberta.shape[0] == len(lab.labels)):
        raise DataError(
            f"record counts disagree: bart {bart.shape[0]}, roberta {roberta.shape[0]}, "
            f"labels {len(lab.labels)}")
    return EmbeddingDataset(bart=bart, roberta=roberta, labels=lab.labels,
                            class_names=lab.class_names, ids=lab.ids)


@dataclass
class SynthSpec:
    n_classes: int = 10
    per_class: int = 200
    bart_dim: int = 1024
    roberta_dim: int = 768
    separation: float = 4.0   # class-mean spread as a multiple of noise_sigma
    noise_sigma: float = 0.25
    seed: int = 0


def gen_synthetic(spec):
    """Isotropic Gaussian clouds per class in both embedding spaces.

    Class means are drawn with stddev separation*noise_sigma per coordinate,
    samples with stddev noise_sigma around their class mean. At the default
    separation of 4 the classes are essentially linearly separable; at 0 all
    classes collapse onto one cloud.
    """
    rng = seeded_rng(spec.seed)
    C, m = spec.n_classes, spec.per_class
    n = C * m
    labels = np.repeat(np.arange(C, dtype=np.int64), m)
    mean_scale = spec.separation * spec.noise_sigma
    out = []
    for dim in (spec.bart_dim, spec.roberta_dim):
        means = rng.normal(0.0, mean_scale, size=(C, dim))
        X = means[labels] + rng.normal(0.0, spec.noise_sigma, size=(n, dim))
        out.append(X.astype(np.float32))
    class_names = [f"class_{c:02d}" for c in range(C)]
    ids = [f"syn-{i:05d}" for i in range(n)]
    return EmbeddingDataset(bart=out[0], roberta=out[1], labels=labels,
                            class_names=class_names, ids=ids)


@dataclass
class Document:
    id: str
    text: str
    label: str


def read_jsonl_corpus(path):
    """One JSON object per line with fields id, text, label."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DataError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from None
            if not isinstance(obj, dict) or not {"id", "text", "label"} <= obj.keys():
                raise DataError(f"{path}: line {lineno}: need fields id, text, label")
            docs.append(Document(id=str(obj["id"]), text=str(obj["text"]),
                                 label=str(obj["label"])))
    return docs


def write_jsonl_corpus(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for d in docs:
            fh.write(json.dumps({"id": d.id, "text": d.text, "label": d.label},
                                ensure_ascii=False) + "\n")
