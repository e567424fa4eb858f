"""Embedding extraction for the misinfonet classifier.

Reads JSONL corpora, runs pretrained encoder checkpoints, and writes the
MREB embedding files and label CSVs the classifier trains on. The two
packages share only those file formats; neither imports the other.
"""

from .extract import ExtractError, extract_corpus, write_embeddings, write_labels
from .io import CorpusError, read_corpus, write_corpus
from .sample import SampleError, sample_corpus

__all__ = [
    "CorpusError",
    "ExtractError",
    "SampleError",
    "extract_corpus",
    "read_corpus",
    "sample_corpus",
    "write_corpus",
    "write_embeddings",
    "write_labels",
]
